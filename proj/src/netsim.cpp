#include "wncs/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace wncs {

void RoundSchedule::validate() const {
    if (!(period_T > 0)) throw ConfigError("round period must be positive");
    if (!(slot_length > 0)) throw ConfigError("slot length must be positive");
    std::set<std::string> ids;
    for (const auto& s : slots)
        if (!ids.insert(s.message_id).second)
            throw ConfigError("duplicate message id in schedule: " + s.message_id);
}

void LossConfig::validate() const {
    for (double p : {mu_theta, mu_phi, mu_exchange, beacon_loss_p})
        if (p < 0.0 || p > 1.0) throw ConfigError("probabilities must lie in [0, 1]");
    if (burst && (burst->length < 0 || !(burst->interval_s > 0)))
        throw ConfigError("burst config invalid");
}

bool RoundOutcome::delivered(const std::string& message_id, const std::string& dest) const {
    for (const auto& d : deliveries)
        if (d.delivered && d.message_id == message_id && d.destination == dest) return true;
    return false;
}

NetworkSim::NetworkSim(std::vector<Mode> modes, LossConfig loss, int initial_mode,
                       std::vector<std::string> nodes)
    : loss_(loss), current_(initial_mode) {
    loss_.validate();
    for (auto& m : modes) {
        m.schedule.validate();
        if (!modes_.emplace(m.id, std::move(m)).second)
            throw ConfigError("duplicate mode id");
    }
    if (!modes_.count(current_)) throw ConfigError("initial mode unknown");
    for (const auto& n : nodes) node_state_[n] = NodeState{current_};
}

const Mode* NetworkSim::find_mode(int id) const {
    auto it = modes_.find(id);
    return it == modes_.end() ? nullptr : &it->second;
}

bool NetworkSim::host_request_mode_change(int next_mode, int rounds) {
    if (pending_ || dead_round_next_) return false;
    if (!modes_.count(next_mode) || rounds < 1) return false;
    pending_ = Pending{next_mode, rounds};
    return true;
}

ModeChangeEvents NetworkSim::advance_mode_change() {
    ModeChangeEvents ev;
    if (!pending_ || pending_->counter > 0) return ev;
    for (auto& [name, st] : node_state_) {
        if (st.informed) st.local_mode = pending_->next_mode;
        st.informed = false;
    }
    current_ = pending_->next_mode;
    pending_.reset();
    dead_round_next_ = true;
    ev.switched = true;
    ev.flushed = true;
    ev.dead_round = true;
    return ev;
}

bool NetworkSim::in_burst(std::int64_t round) const {
    if (!loss_.burst || loss_.burst->length <= 0) return false;
    const double period = current_mode().schedule.period_T;
    const auto interval_rounds =
        static_cast<std::int64_t>(std::llround(loss_.burst->interval_s / period));
    if (interval_rounds <= 0) return false;
    const std::int64_t offset = round % interval_rounds;
    return round >= interval_rounds && offset < loss_.burst->length;
}

void NetworkSim::set_out_of_mode(const std::string& node, int stale_mode) {
    node_state_.at(node).local_mode = stale_mode;
    node_state_.at(node).informed = false;
}

RoundOutcome NetworkSim::run_round(std::mt19937_64& rng) {
    RoundOutcome out;
    out.round = round_;
    out.events = advance_mode_change();
    out.data_round = !dead_round_next_;
    dead_round_next_ = false;
    out.beacon_mode = current_;

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Mode& mode = modes_.at(current_);

    std::map<std::string, bool> participates;
    for (auto& [name, st] : node_state_) {
        const bool beacon = unit(rng) >= loss_.beacon_loss_p;
        out.beacon_received[name] = beacon;
        if (!beacon) {
            participates[name] = false;
            continue;
        }
        if (st.local_mode != current_) {
            // Fall-back: adopt the announced mode now, join the next round.
            st.local_mode = current_;
            st.informed = false;
            out.rejoined.push_back(name);
            participates[name] = false;
            continue;
        }
        if (pending_) st.informed = true;
        participates[name] = true;
    }

    if (out.data_round) {
        const bool burst = in_burst(round_);
        for (const auto& slot : mode.schedule.slots) {
            auto src_it = participates.find(slot.source);
            const bool src_ok = src_it != participates.end() && src_it->second;
            for (const auto& dst : slot.destinations) {
                auto dst_it = participates.find(dst);
                const bool dst_ok = dst_it != participates.end() && dst_it->second;
                double mu = slot.kind == SlotKind::sensor_to_controller ? loss_.mu_theta
                            : slot.kind == SlotKind::controller_to_actuator
                                ? loss_.mu_phi
                                : loss_.mu_exchange;
                // One uniform draw per (slot, destination) regardless of
                // participation, so loss sequences stay reproducible across
                // protocol states.
                const bool link = unit(rng) < mu;
                const bool delivered = src_ok && dst_ok && link && !burst;
                out.deliveries.push_back({slot.message_id, slot.source, dst, slot.kind, delivered});
            }
        }
    }

    out.duty_cycle =
        (1.0 + (out.data_round ? static_cast<double>(mode.schedule.slots.size()) : 0.0)) *
        mode.schedule.slot_length / mode.schedule.period_T;
    out.duty_cycle = std::min(out.duty_cycle, 1.0);

    for (const auto& [name, st] : node_state_) out.local_modes[name] = st.local_mode;

    if (pending_) pending_->counter -= 1;
    ++round_;
    return out;
}

}  // namespace wncs
