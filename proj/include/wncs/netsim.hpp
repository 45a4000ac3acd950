#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "wncs/matrix.hpp"

namespace wncs {

enum class SlotKind { sensor_to_controller, controller_to_actuator, state_exchange };

struct Slot {
    std::string message_id;
    std::string source;  // node name
    std::vector<std::string> destinations;
    SlotKind kind = SlotKind::sensor_to_controller;
};

struct RoundSchedule {
    double period_T = 0.0;       // seconds
    double slot_length = 0.004;  // seconds, airtime per flood (incl. beacon)
    std::vector<Slot> slots;
    int mode_id = 0;

    void validate() const;
};

struct Mode {
    int id = 0;
    RoundSchedule schedule;
    double T_U = 0.0;
    double T_D = 0.0;  // 2 * T_U for remote-control modes
};

struct BurstConfig {
    int length = 0;        // consecutive rounds of forced loss
    double interval_s = 0.0;
};

struct LossConfig {
    double mu_theta = 1.0;
    double mu_phi = 1.0;
    double mu_exchange = 1.0;
    double beacon_loss_p = 0.001;
    std::optional<BurstConfig> burst;

    void validate() const;
};

struct Delivery {
    std::string message_id;
    std::string source;
    std::string destination;
    SlotKind kind;
    bool delivered = false;
};

struct ModeChangeEvents {
    bool switched = false;    // counter reached zero, informed nodes adopted the new mode
    bool flushed = false;     // in-flight queues discarded
    bool dead_round = false;  // the upcoming round carries no data slots
};

struct RoundOutcome {
    std::int64_t round = 0;
    int beacon_mode = 0;  // current mode id announced by the beacon
    bool data_round = true;
    ModeChangeEvents events;
    std::map<std::string, bool> beacon_received;
    std::vector<std::string> rejoined;  // nodes that resynchronized this round
    std::vector<Delivery> deliveries;
    std::map<std::string, int> local_modes;
    double duty_cycle = 0.0;

    bool delivered(const std::string& message_id, const std::string& dest) const;
};

// Round-based many-to-all network. Every slot is an atomic per-destination
// Bernoulli delivery; a node that missed the beacon or whose local mode does
// not match the beacon participates in nothing for that round.
class NetworkSim {
public:
    NetworkSim(std::vector<Mode> modes, LossConfig loss, int initial_mode,
               std::vector<std::string> nodes);

    RoundOutcome run_round(std::mt19937_64& rng);

    // Embeds (current, next, counter=r) in subsequent beacons. Rejected while
    // another change is pending or when the target mode is unknown.
    bool host_request_mode_change(int next_mode, int rounds);

    // Processes a countdown that reached zero: informed nodes adopt the new
    // mode and the upcoming round is marked as a dead round. No-op otherwise.
    ModeChangeEvents advance_mode_change();

    const Mode& current_mode() const { return modes_.at(current_); }
    const Mode* find_mode(int id) const;
    bool pending() const { return pending_.has_value(); }
    int local_mode(const std::string& node) const { return node_state_.at(node).local_mode; }
    std::int64_t round_index() const { return round_; }
    bool in_burst(std::int64_t round) const;

    void set_out_of_mode(const std::string& node, int stale_mode);  // test/fault hook

private:
    struct Pending {
        int next_mode;
        int counter;
    };
    struct NodeState {
        int local_mode;
        bool informed = false;
    };

    std::map<int, Mode> modes_;
    LossConfig loss_;
    int current_;
    std::map<std::string, NodeState> node_state_;
    std::optional<Pending> pending_;
    bool dead_round_next_ = false;
    std::int64_t round_ = 0;
};

}  // namespace wncs
