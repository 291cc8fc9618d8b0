#pragma once

#include <deque>
#include <map>
#include <optional>
#include <queue>
#include <vector>

#include "wssim/cfo.hpp"
#include "wssim/metrics.hpp"
#include "wssim/rng.hpp"
#include "wssim/scenario.hpp"

namespace wssim {

enum class NodePhase { Associated, OutOfRange, Discovering, Aligning, Joining };

// Per-node mode-time ledger; idle is whatever the horizon leaves over.
struct EnergyLedger {
    double tx_s = 0.0;
    double rx_s = 0.0;
    double rx_wide_s = 0.0;  // wide-band sensing draws extra RX current
};

// Attenuation of the matched filter when the carrier drifts within a
// symbol: 10 log10(sinc^2(residual / symbol_rate)).
double cfo_snr_penalty_db(double residual_cfo_hz, double symbol_rate_hz);

// BER for the supported schemes at the given post-penalty SNR, and the
// packet error probability over `bits` independent bit decisions.
double bit_error_rate(double snr_db, Modulation scheme);
double packet_error_probability(double snr_db, double residual_cfo_hz, double symbol_rate_hz,
                                int bits, Modulation scheme);

// Kinematics for the waypoint shuttle: advance dt, reflecting at the
// segment ends with speed preserved.
struct MobilityState {
    Point position;
    Point direction;  // unit vector, zero when stationary
    double speed_mps = 0.0;
};
MobilityState step_mobility(const MobilityState& state, const MobilitySpec& spec, double dt_s);

// Deterministic event schedule: pops in (time, sequence) order.
struct SimEvent {
    double time_s = 0.0;
    uint64_t seq = 0;
    int kind = 0;
    int node = -1;   // index into the node table, -1 for world events
    int64_t aux = 0;
};

class EventQueue {
public:
    void push(double time_s, int kind, int node = -1, int64_t aux = 0) {
        heap_.push_back({time_s, next_seq_++, kind, node, aux});
        std::push_heap(heap_.begin(), heap_.end(), later);
    }
    bool empty() const { return heap_.empty(); }
    SimEvent pop() {
        std::pop_heap(heap_.begin(), heap_.end(), later);
        SimEvent e = heap_.back();
        heap_.pop_back();
        return e;
    }

private:
    static bool later(const SimEvent& a, const SimEvent& b) {
        if (a.time_s != b.time_s) return a.time_s > b.time_s;
        return a.seq > b.seq;
    }
    std::vector<SimEvent> heap_;
    uint64_t next_seq_ = 0;
};

// Discrete-event world. One instance runs one (scenario, seed) pair; the
// loop is single-threaded and fully deterministic.
class Simulator {
public:
    Simulator(const Scenario& scenario, uint64_t seed, std::string base_dir = "");
    MetricsReport run();

    // Link budget backend, exposed for tests: tx - PL(d) in dBm.
    static double rss_dbm(double tx_power_dbm, double distance_m, const PropagationModel& model);

private:
    struct BsState {
        BsSpec spec;
        Subcarrier join_sc;
        std::vector<Subcarrier> data_scs;
        std::map<std::string, CfoEstimate> uplink_cfo;  // per node, from join/re-estimation
        std::vector<std::string> associated;
        std::map<int, int> cell_count_cache;  // availability cells per channel
        int packets_decoded = 0;
        long long bits_decoded = 0;
    };

    struct PacketJob {
        int remaining = 0;
        int attempt = 0;        // failure retries of the head-of-line packet
        int busy_backoffs = 0;  // consecutive busy-channel backoffs
        double arrival_s = 0.0;
    };

    struct NodeState {
        NodeSpec spec;
        MobilityState motion;
        NodePhase phase = NodePhase::Associated;
        int serving_bs = -1;
        int target_bs = -1;
        std::optional<Subcarrier> subcarrier;
        double belief_ppm = 0.0;  // uplink pre-compensation (osc + Doppler)
        bool belief_valid = false;
        CfoEstimate downlink_est;  // node-side table entry from the last grant
        double last_estimate_s = 0.0;
        double radial_speed_mps = 0.0;  // toward serving BS, positive receding
        double below_range_since_s = -1.0;
        EnergyLedger ledger;
        PacketJob job;
        Rng rng{0};
        std::deque<int> channel_cache;  // most recent serving channels
        int discovery_rounds = 0;
        // metrics
        int offered = 0, delivered = 0, dropped = 0, attempts = 0, attempt_failures = 0;
        long long bits_delivered = 0;
        double first_attempt_s = -1.0, last_delivery_s = 0.0, latency_sum_s = 0.0;
        int handoffs = 0, join_rejections = 0;
        // handoff in progress
        HandoffRecord pending_handoff;
        double align_center_hz = 0.0;
        int join_tries = 0;
    };

    struct ActiveTx {
        double start_s, end_s;
        double lo_hz, hi_hz;
        double power_dbm;
        Point location;
        int node = -1;  // -1 for BS downlink
        int bs = -1;
        uint64_t id = 0;
    };

    // event handlers
    void on_mobility_tick(double now);
    void on_traffic_start(double now, int node);
    void on_csma_attempt(double now, int node);
    void on_tx_end(double now, int node, uint64_t tx_id);
    void on_reestimate(double now, int node);
    void on_discover(double now, int node);
    void on_align(double now, int node);
    void on_join(double now, int node);

    // helpers
    double now_distance(const NodeState& n, const BsState& bs) const;
    double clip_to_horizon(double now, double duration_s) const;
    double uplink_snr_db(const NodeState& n, const BsState& bs, double t0, double t1,
                         double lo_hz, double hi_hz, uint64_t self_id);
    double true_uplink_offset_hz(const NodeState& n, double freq_hz) const;
    double residual_uplink_cfo_hz(const NodeState& n, double freq_hz) const;
    bool decide_packet(NodeState& n, double snr_db, double residual_hz, int bits);
    void refresh_belief(NodeState& n, double now, double snr_db, bool sample_level, double freq_hz);
    void schedule_next_packet(double now, int node, double delay_s);
    void start_handoff(double now, int node);
    void deliver(double now, NodeState& n, BsState& bs, int bits, double arrival_s);
    void assign_subcarriers(BsState& bs);
    double estimator_sigma_hz(double snr_db) const;
    bool channel_busy_at(const NodeState& n, double now, double lo_hz, double hi_hz,
                         uint64_t self_id) const;
    void prune_ledger(double now);

    Scenario sc_;
    uint64_t seed_;
    SpectrumMap map_;
    std::vector<BsState> bss_;
    std::vector<NodeState> nodes_;
    EventQueue queue_;
    std::vector<ActiveTx> ledger_;
    uint64_t next_tx_id_ = 1;
    Rng world_rng_{0};
    Preamble preamble_;
    std::vector<HandoffRecord> handoffs_;
    double mobility_tick_s_ = 0.1;
};

}  // namespace wssim
