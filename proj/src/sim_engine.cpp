#include "wssim/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "wssim/assignment.hpp"
#include "wssim/dsp.hpp"

namespace wssim {

namespace {

// Event kinds.
enum : int {
    kMobilityTick = 1,
    kTrafficStart,
    kCsmaAttempt,
    kTxEnd,
    kReestimate,
    kDiscover,
    kAlign,
    kJoin,
};

constexpr double kTurnaroundS = 1e-3;
constexpr int kJoinRequestBits = 64;
constexpr int kJoinGrantBits = 64;
constexpr int kAckBits = 64;
constexpr int kMaxJoinTries = 8;
constexpr int kMaxNodesPerSubcarrier = 16;
constexpr int kChannelCacheSize = 4;
constexpr int kTraceSamples = 100;

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Two transmissions conflict when their bands overlap, unless both sit on
// the same orthogonal grid (equal width, spacing a nonzero multiple of the
// grid step): those are exactly the overlapped-but-orthogonal neighbors
// D-OFDM relies on.
bool bands_conflict(double lo_a, double hi_a, double bw_a, double lo_b, double hi_b, double bw_b,
                    double grid_step_frac) {
    if (hi_a <= lo_b || hi_b <= lo_a) return false;
    if (std::abs(bw_a - bw_b) < 1e-3) {
        const double step = bw_a * grid_step_frac;
        const double spacing = std::abs((lo_a + hi_a) - (lo_b + hi_b)) / 2.0;
        if (spacing > 1e-3 && step > 0.0) {
            const double k = spacing / step;
            if (std::abs(k - std::round(k)) < 1e-6) return false;
        }
    }
    return true;
}

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

}  // namespace

double cfo_snr_penalty_db(double residual_cfo_hz, double symbol_rate_hz) {
    const double g = dsp::sinc(residual_cfo_hz / symbol_rate_hz);
    if (g <= 1e-12) return -240.0;
    return 20.0 * std::log10(std::abs(g));
}

double bit_error_rate(double snr_db, Modulation scheme) {
    const double gamma = db_to_linear(snr_db);
    switch (scheme) {
        case Modulation::Bpsk:
            return q_function(std::sqrt(2.0 * gamma));
        case Modulation::Ook:
            return 0.5 * std::exp(-gamma / 2.0);
    }
    return 0.5;
}

double packet_error_probability(double snr_db, double residual_cfo_hz, double symbol_rate_hz,
                                int bits, Modulation scheme) {
    if (symbol_rate_hz <= 0.0) throw std::invalid_argument("packet_error_probability: symbol rate");
    const double eff_snr = snr_db + cfo_snr_penalty_db(residual_cfo_hz, symbol_rate_hz);
    const double ber = std::min(0.5, bit_error_rate(eff_snr, scheme));
    return 1.0 - std::pow(1.0 - ber, static_cast<double>(bits));
}

MobilityState step_mobility(const MobilityState& state, const MobilitySpec& spec, double dt_s) {
    if (dt_s <= 0.0) throw std::invalid_argument("step_mobility: dt must be > 0");
    if (spec.kind == MobilitySpec::Kind::Stationary || state.speed_mps == 0.0) return state;
    if (state.direction.x_m == 0.0 && state.direction.y_m == 0.0) return state;  // degenerate segment

    MobilityState out = state;
    double remaining = state.speed_mps * dt_s;
    // Shuttle along the from-to segment, reflecting at the ends.
    while (remaining > 0.0) {
        const Point target = (out.direction.x_m * (spec.to.x_m - spec.from.x_m) +
                              out.direction.y_m * (spec.to.y_m - spec.from.y_m)) >= 0.0
                                 ? spec.to
                                 : spec.from;
        const double to_target = distance_m(out.position, target);
        if (to_target >= remaining) {
            out.position.x_m += out.direction.x_m * remaining;
            out.position.y_m += out.direction.y_m * remaining;
            break;
        }
        out.position = target;
        out.direction.x_m = -out.direction.x_m;
        out.direction.y_m = -out.direction.y_m;
        remaining -= to_target;
    }
    return out;
}

double Simulator::rss_dbm(double tx_power_dbm, double distance_m, const PropagationModel& model) {
    return tx_power_dbm - path_loss_db(model, distance_m);
}

Simulator::Simulator(const Scenario& scenario, uint64_t seed, std::string base_dir)
    : sc_(scenario), seed_(seed), map_(build_spectrum_map(scenario.world, base_dir)),
      world_rng_(Rng::split(seed, 0)) {
    preamble_ = preamble_from_word(sc_.policy.preamble_word);
    sc_.world.seed = seed;

    for (const auto& spec : sc_.base_stations) {
        BsState bs;
        bs.spec = spec;
        // Subcarrier grid over the 6 MHz channel. The bottom slot is the
        // join subcarrier (first thing a channel sweep hears); data slots
        // must not overlap it.
        const double bw = spec.subcarrier_bandwidth_hz;
        const double step = bw * (1.0 - sc_.policy.overlap_fraction);
        const int count = count_orthogonal_subcarriers(kTvChannelWidthHz, bw,
                                                       sc_.policy.overlap_fraction);
        const double lo = channel_low_hz(spec.channel);
        std::vector<Subcarrier> grid;
        for (int i = 0; i < count; ++i)
            grid.push_back({lo + bw / 2.0 + step * static_cast<double>(i), bw});
        bs.join_sc = grid.front();
        for (const auto& sc : grid) {
            if (sc.center_freq_hz - bw / 2.0 >= bs.join_sc.center_freq_hz + bw / 2.0 - 1e-6)
                bs.data_scs.push_back(sc);
        }
        bss_.push_back(std::move(bs));
    }

    for (const auto& spec : sc_.nodes) {
        NodeState n;
        n.spec = spec;
        n.motion.position = spec.location;
        if (spec.mobility.kind == MobilitySpec::Kind::Waypoint) {
            n.motion.speed_mps = spec.mobility.speed_mps;
            const double dx = spec.mobility.to.x_m - spec.mobility.from.x_m;
            const double dy = spec.mobility.to.y_m - spec.mobility.from.y_m;
            const double len = std::hypot(dx, dy);
            if (len > 0.0) n.motion.direction = {dx / len, dy / len};
        }
        n.rng = Rng::split(seed, fnv1a(spec.id));
        nodes_.push_back(std::move(n));
    }

    // Nodes begin attached to the nearest audible BS (their join happened
    // before the observation window); everyone else starts the handoff
    // machinery at the first tick.
    for (size_t i = 0; i < nodes_.size(); ++i) {
        auto& n = nodes_[i];
        int best = -1;
        double best_rss = -1e9;
        for (size_t b = 0; b < bss_.size(); ++b) {
            const double rss = rss_dbm(bss_[b].spec.tx_power_dbm, now_distance(n, bss_[b]),
                                       sc_.world.propagation);
            if (rss >= sc_.world.sensitivity_dbm && rss > best_rss) {
                best = static_cast<int>(b);
                best_rss = rss;
            }
        }
        if (best >= 0) {
            n.phase = NodePhase::Associated;
            n.serving_bs = best;
            bss_[best].associated.push_back(n.spec.id);
            if (sc_.policy.channel_cache) n.channel_cache.push_back(bss_[best].spec.channel);
            if (sc_.policy.cfo_compensation) {
                const double f = bss_[best].join_sc.center_freq_hz;
                const double snr = rss_dbm(n.spec.tx_power_dbm, now_distance(n, bss_[best]),
                                           sc_.world.propagation) -
                                   sc_.world.noise_floor_dbm;
                const double measured =
                    true_uplink_offset_hz(n, f) + n.rng.gaussian(0.0, estimator_sigma_hz(snr));
                n.belief_ppm = 1e6 * measured / f;
                n.belief_valid = true;
                bss_[best].uplink_cfo[n.spec.id] = make_cfo_estimate(measured, f, 0.0);
            }
        } else {
            n.phase = NodePhase::OutOfRange;
        }
    }
    for (auto& bs : bss_) assign_subcarriers(bs);
}

double Simulator::now_distance(const NodeState& n, const BsState& bs) const {
    return distance_m(n.motion.position, bs.spec.location);
}

double Simulator::clip_to_horizon(double now, double duration_s) const {
    return std::max(0.0, std::min(duration_s, sc_.world.horizon_s - now));
}

double Simulator::estimator_sigma_hz(double snr_db) const {
    // Error of the two-stage estimator scales inversely with amplitude
    // SNR; pinned to the Monte-Carlo-measured sigma at 30 dB.
    const double sigma = sc_.policy.est_sigma_hz_at_30db * std::pow(10.0, (30.0 - snr_db) / 20.0);
    return std::clamp(sigma, 0.02, 5e3);
}

double Simulator::true_uplink_offset_hz(const NodeState& n, double freq_hz) const {
    return (n.spec.ppm / 1e6 - n.radial_speed_mps / kLightSpeedMps) * freq_hz;
}

double Simulator::residual_uplink_cfo_hz(const NodeState& n, double freq_hz) const {
    const double true_offset = true_uplink_offset_hz(n, freq_hz);
    if (!sc_.policy.cfo_compensation || !n.belief_valid) return true_offset;
    return true_offset - n.belief_ppm / 1e6 * freq_hz;
}

bool Simulator::channel_busy_at(const NodeState& n, double now, double lo_hz, double hi_hz,
                                uint64_t self_id) const {
    const double grid = 1.0 - sc_.policy.overlap_fraction;
    for (const auto& tx : ledger_) {
        if (tx.id == self_id) continue;
        if (tx.end_s <= now || tx.start_s > now) continue;
        if (!bands_conflict(lo_hz, hi_hz, hi_hz - lo_hz, tx.lo_hz, tx.hi_hz, tx.hi_hz - tx.lo_hz,
                            grid))
            continue;
        const double rss = rss_dbm(tx.power_dbm, distance_m(tx.location, n.motion.position),
                                   sc_.world.propagation);
        if (rss >= sc_.world.sensitivity_dbm) return true;
    }
    return false;
}

void Simulator::prune_ledger(double now) {
    std::erase_if(ledger_, [now](const ActiveTx& tx) { return tx.end_s < now - 1.0; });
}

double Simulator::uplink_snr_db(const NodeState& n, const BsState& bs, double t0, double t1,
                                double lo_hz, double hi_hz, uint64_t self_id) {
    const double sig = rss_dbm(n.spec.tx_power_dbm, now_distance(n, bs), sc_.world.propagation);
    const double grid = 1.0 - sc_.policy.overlap_fraction;
    double interference_mw = 0.0;
    for (const auto& tx : ledger_) {
        if (tx.id == self_id) continue;
        if (tx.end_s <= t0 || tx.start_s >= t1) continue;
        if (!bands_conflict(lo_hz, hi_hz, hi_hz - lo_hz, tx.lo_hz, tx.hi_hz, tx.hi_hz - tx.lo_hz,
                            grid))
            continue;
        interference_mw += dbm_to_mw(
            rss_dbm(tx.power_dbm, distance_m(tx.location, bs.spec.location), sc_.world.propagation));
    }
    const double noise_mw = dbm_to_mw(sc_.world.noise_floor_dbm) + interference_mw;
    return sig - mw_to_dbm(noise_mw);
}

bool Simulator::decide_packet(NodeState& n, double snr_db, double residual_hz, int bits) {
    const double rs = n.subcarrier->bandwidth_hz;
    const bool sample_level = sc_.policy.fidelity == Fidelity::Sample;
    if (!sample_level) {
        const double pep =
            packet_error_probability(snr_db, residual_hz, rs, bits, sc_.policy.modulation);
        return !n.rng.bernoulli(pep);
    }
    // Sample fidelity: push the payload through the real DSP chain. The
    // matched filter exhibits the CFO loss on its own; noise is calibrated
    // to the same Es/N0 the analytic route uses.
    std::vector<uint8_t> payload(static_cast<size_t>(bits));
    for (auto& b : payload) b = n.rng.bernoulli(0.5) ? 1 : 0;
    const size_t sps = 8;
    Subcarrier sc{rs * 10.0, rs};
    auto tx = modulate(payload, sc_.policy.modulation, sc, rs * static_cast<double>(sps),
                       sc.center_freq_hz);
    tx = apply_cfo(tx, residual_hz);
    tx = add_awgn(tx, snr_db, sps, n.rng);
    const auto rx = demodulate(tx, sc_.policy.modulation, sc, std::nullopt, true);
    return rx == payload;
}

void Simulator::refresh_belief(NodeState& n, double now, double snr_db, bool sample_level,
                               double freq_hz) {
    if (!sc_.policy.cfo_compensation) return;
    const double true_offset = true_uplink_offset_hz(n, freq_hz);
    double measured;
    if (sample_level) {
        // Synthesize the preamble the BS sees (prior compensation already
        // removed) and run the real estimator on it.
        const double believed = n.belief_valid ? n.belief_ppm / 1e6 * freq_hz : 0.0;
        const double rs = n.subcarrier ? n.subcarrier->bandwidth_hz
                                       : bss_[n.serving_bs].spec.subcarrier_bandwidth_hz;
        Subcarrier ref{rs * 10.0, rs};
        auto buf = modulate(preamble_bits(preamble_), sc_.policy.modulation, ref, rs * 8.0,
                            ref.center_freq_hz, 1.0, now);
        buf = apply_cfo(buf, true_offset - believed);
        buf = add_awgn(buf, snr_db, 8, n.rng);
        try {
            const auto est = estimate_cfo(buf, preamble_, rs, {sc_.policy.modulation});
            measured = believed + est.delta_f_hz;
        } catch (const std::exception&) {
            return;  // estimation failed; keep the previous belief
        }
    } else {
        measured = true_offset + n.rng.gaussian(0.0, estimator_sigma_hz(snr_db));
    }
    n.belief_ppm = 1e6 * measured / freq_hz;
    n.belief_valid = true;
    n.last_estimate_s = now;
    if (n.serving_bs >= 0)
        bss_[n.serving_bs].uplink_cfo[n.spec.id] = make_cfo_estimate(measured, freq_hz, now);
}

void Simulator::assign_subcarriers(BsState& bs) {
    if (bs.associated.empty()) return;
    std::vector<MobilityProfile> profiles;
    for (const auto& id : bs.associated) {
        for (const auto& n : nodes_) {
            if (n.spec.id == id) profiles.push_back({id, n.spec.mobility.rate_m_per_h()});
        }
    }
    const double r_cov =
        sc_.world.propagation.reference_distance_m *
        std::pow(10.0, (bs.spec.tx_power_dbm - sc_.world.propagation.reference_loss_db -
                        sc_.world.sensitivity_dbm) /
                           (10.0 * (sc_.world.propagation.kind == PropagationModel::Kind::FreeSpace
                                        ? 2.0
                                        : sc_.world.propagation.exponent)));
    std::vector<AvailabilityScore> scores;
    for (const auto& sc : bs.data_scs) {
        const auto ch = channel_of_freq(sc.center_freq_hz);
        int cells = 0;
        if (ch) {
            auto it = bs.cell_count_cache.find(*ch);
            if (it == bs.cell_count_cache.end()) {
                cells = map_.count_available_cells(*ch, bs.spec.location, r_cov);
                bs.cell_count_cache.emplace(*ch, cells);
            } else {
                cells = it->second;
            }
        }
        scores.push_back({sc, cells});
    }
    const auto assignment = assign(profiles, scores);
    for (auto& n : nodes_) {
        const auto it = assignment.find(n.spec.id);
        if (it != assignment.end()) n.subcarrier = it->second;
    }
}

MetricsReport Simulator::run() {
    const double horizon = sc_.world.horizon_s;
    queue_.push(std::min(mobility_tick_s_, horizon), kMobilityTick);
    for (size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].spec.traffic.packet_count > 0)
            queue_.push(nodes_[i].spec.traffic.start_s, kTrafficStart, static_cast<int>(i));
        if (sc_.policy.cfo_compensation && sc_.policy.reestimation_period_s > 0.0)
            queue_.push(sc_.policy.reestimation_period_s, kReestimate, static_cast<int>(i));
        if (nodes_[i].phase == NodePhase::OutOfRange) {
            nodes_[i].pending_handoff = HandoffRecord{};
            nodes_[i].pending_handoff.node_id = nodes_[i].spec.id;
            nodes_[i].pending_handoff.start_s = 0.0;
            nodes_[i].phase = NodePhase::Discovering;
            nodes_[i].handoffs += 1;
            queue_.push(0.0, kDiscover, static_cast<int>(i));
        }
    }

    while (!queue_.empty()) {
        const SimEvent e = queue_.pop();
        if (e.time_s > horizon) break;
        switch (e.kind) {
            case kMobilityTick: on_mobility_tick(e.time_s); break;
            case kTrafficStart: on_traffic_start(e.time_s, e.node); break;
            case kCsmaAttempt: on_csma_attempt(e.time_s, e.node); break;
            case kTxEnd: on_tx_end(e.time_s, e.node, static_cast<uint64_t>(e.aux)); break;
            case kReestimate: on_reestimate(e.time_s, e.node); break;
            case kDiscover: on_discover(e.time_s, e.node); break;
            case kAlign: on_align(e.time_s, e.node); break;
            case kJoin: on_join(e.time_s, e.node); break;
            default: break;
        }
    }

    MetricsReport report;
    report.scenario_name = sc_.name;
    report.plot_x = sc_.plot_x;
    report.seed = seed_;
    report.horizon_s = horizon;
    report.fidelity = sc_.policy.fidelity == Fidelity::Analytic  ? "analytic"
                      : sc_.policy.fidelity == Fidelity::Sample ? "sample"
                                                                 : "mixed";
    const auto& en = sc_.world.energy;
    for (const auto& n : nodes_) {
        NodeMetrics m;
        m.id = n.spec.id;
        m.mobility_rate = n.spec.mobility.rate_m_per_h();
        m.offered = n.offered;
        m.delivered = n.delivered;
        m.dropped = n.dropped;
        m.attempts = n.attempts;
        m.attempt_failures = n.attempt_failures;
        m.bits_delivered = n.bits_delivered;
        m.collection_time_s =
            n.first_attempt_s >= 0.0 && n.last_delivery_s > n.first_attempt_s
                ? n.last_delivery_s - n.first_attempt_s
                : 0.0;
        m.mean_latency_s = n.delivered > 0 ? n.latency_sum_s / n.delivered : 0.0;
        m.tx_time_s = n.ledger.tx_s;
        m.rx_time_s = n.ledger.rx_s + n.ledger.rx_wide_s;
        m.idle_time_s = std::max(0.0, horizon - m.tx_time_s - m.rx_time_s);
        m.energy_tx_j = en.tx_power_w() * n.ledger.tx_s;
        m.energy_rx_j = en.rx_power_w() *
                        (n.ledger.rx_s + sc_.policy.discovery.wide_rx_power_factor * n.ledger.rx_wide_s);
        m.energy_idle_j = en.idle_power_w() * m.idle_time_s;
        m.energy_total_j = m.energy_tx_j + m.energy_rx_j + m.energy_idle_j;
        m.handoffs = n.handoffs;
        m.join_rejections = n.join_rejections;
        report.nodes.push_back(std::move(m));
    }
    for (const auto& bs : bss_) {
        report.base_stations.push_back({bs.spec.id, bs.packets_decoded, bs.bits_decoded});
    }
    report.handoffs = handoffs_;
    finalize_report(report);
    return report;
}

void Simulator::on_mobility_tick(double now) {
    for (size_t i = 0; i < nodes_.size(); ++i) {
        auto& n = nodes_[i];
        n.motion = step_mobility(n.motion, n.spec.mobility, mobility_tick_s_);
        if (n.serving_bs >= 0) {
            const auto& bs = bss_[n.serving_bs];
            // Radial speed toward the serving BS feeds the Doppler term.
            const double d = now_distance(n, bs);
            if (d > 0.0 && n.motion.speed_mps > 0.0) {
                const double ux = (n.motion.position.x_m - bs.spec.location.x_m) / d;
                const double uy = (n.motion.position.y_m - bs.spec.location.y_m) / d;
                n.radial_speed_mps =
                    n.motion.speed_mps * (n.motion.direction.x_m * ux + n.motion.direction.y_m * uy);
            } else {
                n.radial_speed_mps = 0.0;
            }
        }
        if (n.phase == NodePhase::Associated && n.serving_bs >= 0) {
            const double rss = rss_dbm(bss_[n.serving_bs].spec.tx_power_dbm,
                                       now_distance(n, bss_[n.serving_bs]), sc_.world.propagation);
            if (rss < sc_.world.sensitivity_dbm) {
                if (n.below_range_since_s < 0.0) n.below_range_since_s = now;
                const double hysteresis = 3.0 * bss_[n.serving_bs].spec.beacon_period_s;
                if (now - n.below_range_since_s >= hysteresis) start_handoff(now, static_cast<int>(i));
            } else {
                n.below_range_since_s = -1.0;
            }
        }
    }
    prune_ledger(now);
    queue_.push(now + mobility_tick_s_, kMobilityTick);
}

void Simulator::on_traffic_start(double now, int node) {
    auto& n = nodes_[static_cast<size_t>(node)];
    n.job.remaining = n.spec.traffic.packet_count;
    n.job.arrival_s = now;
    n.job.attempt = 0;
    queue_.push(now, kCsmaAttempt, node);
}

void Simulator::schedule_next_packet(double now, int node, double delay_s) {
    auto& n = nodes_[static_cast<size_t>(node)];
    if (n.job.remaining <= 0) return;
    double next = now + delay_s;
    if (n.spec.traffic.packet_rate_pps > 0.0) {
        const double interval = 1.0 / n.spec.traffic.packet_rate_pps;
        n.job.arrival_s = n.job.arrival_s + interval;
        next = std::max(next, n.job.arrival_s);
    } else {
        n.job.arrival_s = next;
    }
    queue_.push(next, kCsmaAttempt, node);
}

void Simulator::on_csma_attempt(double now, int node) {
    auto& n = nodes_[static_cast<size_t>(node)];
    if (n.job.remaining <= 0) return;
    if (n.phase != NodePhase::Associated || !n.subcarrier || n.serving_bs < 0)
        return;  // re-queued once the node rejoins

    // Carrier sense before send; binary exponential backoff on busy, one
    // packet airtime per slot, capped at five doublings.
    n.ledger.rx_s += sc_.policy.cca_s;
    const double lo = n.subcarrier->center_freq_hz - n.subcarrier->bandwidth_hz / 2.0;
    const double hi = n.subcarrier->center_freq_hz + n.subcarrier->bandwidth_hz / 2.0;
    if (channel_busy_at(n, now, lo, hi, 0)) {
        n.job.busy_backoffs = std::min(n.job.busy_backoffs + 1, 5);
        const double airtime =
            static_cast<double>(n.spec.traffic.packet_bytes * 8) / n.subcarrier->bandwidth_hz;
        const auto slots = n.rng.uniform_int(1ull << n.job.busy_backoffs);
        queue_.push(now + sc_.policy.cca_s + static_cast<double>(slots) * airtime, kCsmaAttempt,
                    node);
        return;
    }
    n.job.busy_backoffs = 0;

    const double t0 = now + sc_.policy.cca_s;
    const double airtime =
        static_cast<double>(n.spec.traffic.packet_bytes * 8) / n.subcarrier->bandwidth_hz;
    if (n.job.attempt == 0) ++n.offered;
    ++n.attempts;
    if (n.first_attempt_s < 0.0) n.first_attempt_s = t0;
    n.ledger.tx_s += airtime;
    const uint64_t id = next_tx_id_++;
    ledger_.push_back({t0, t0 + airtime, lo, hi, n.spec.tx_power_dbm, n.motion.position, node,
                       n.serving_bs, id});
    queue_.push(t0 + airtime, kTxEnd, node, static_cast<int64_t>(id));
}

void Simulator::on_tx_end(double now, int node, uint64_t tx_id) {
    auto& n = nodes_[static_cast<size_t>(node)];
    const auto it = std::find_if(ledger_.begin(), ledger_.end(),
                                 [tx_id](const ActiveTx& t) { return t.id == tx_id; });
    if (it == ledger_.end()) return;
    if (n.serving_bs < 0 || !n.subcarrier) {
        // A handoff started while this packet was in the air; nobody was
        // listening.
        ++n.attempt_failures;
        if (!sc_.policy.ack_enabled) {
            n.job.remaining -= 1;  // open loop: the node never learns
            n.job.attempt = 0;
        } else if (n.job.attempt < sc_.policy.max_retries) {
            n.job.attempt += 1;  // retried once the node rejoins
        } else {
            ++n.dropped;
            n.job.remaining -= 1;
            n.job.attempt = 0;
        }
        return;
    }
    auto& bs = bss_[static_cast<size_t>(n.serving_bs)];

    double snr = uplink_snr_db(n, bs, it->start_s, it->end_s, it->lo_hz, it->hi_hz, tx_id);
    if (sc_.policy.snr_jitter_db > 0.0) snr += n.rng.gaussian(0.0, sc_.policy.snr_jitter_db);
    const double sig = rss_dbm(n.spec.tx_power_dbm, now_distance(n, bs), sc_.world.propagation);
    const double residual = residual_uplink_cfo_hz(n, n.subcarrier->center_freq_hz);
    const int bits = n.spec.traffic.packet_bytes * 8;

    bool ok = sig >= sc_.world.sensitivity_dbm && decide_packet(n, snr, residual, bits);
    if (ok) {
        deliver(now, n, bs, bits, n.job.arrival_s);
    } else {
        ++n.attempt_failures;
    }

    double next_delay = 0.0;
    if (sc_.policy.ack_enabled) {
        const double ack_airtime = static_cast<double>(kAckBits) / n.subcarrier->bandwidth_hz;
        const double ack_window = kTurnaroundS + ack_airtime;
        n.ledger.rx_s += ack_window;
        next_delay = ack_window;
        if (ok && sc_.policy.cfo_feedback_on_ack) {
            // BS piggybacks a refreshed pre-compensation value on the ACK.
            refresh_belief(n, now, snr, false, n.subcarrier->center_freq_hz);
        }
    }

    if (ok) {
        n.job.remaining -= 1;
        n.job.attempt = 0;
        schedule_next_packet(now, node, next_delay);
    } else if (sc_.policy.ack_enabled && n.job.attempt < sc_.policy.max_retries) {
        n.job.attempt += 1;
        const double airtime = static_cast<double>(bits) / n.subcarrier->bandwidth_hz;
        const auto slots = n.rng.uniform_int(1ull << std::min(n.job.attempt, 5));
        queue_.push(now + next_delay + static_cast<double>(slots) * airtime, kCsmaAttempt, node);
    } else {
        // Without ACKs the node cannot tell; with ACKs this is the retry
        // budget running out. Either way the packet is lost.
        ++n.dropped;
        n.job.remaining -= 1;
        n.job.attempt = 0;
        schedule_next_packet(now, node, next_delay);
    }
}

void Simulator::deliver(double now, NodeState& n, BsState& bs, int bits, double arrival_s) {
    ++n.delivered;
    n.bits_delivered += bits;
    n.latency_sum_s += now - arrival_s;
    n.last_delivery_s = now;
    ++bs.packets_decoded;
    bs.bits_decoded += bits;
}

void Simulator::on_reestimate(double now, int node) {
    auto& n = nodes_[static_cast<size_t>(node)];
    if (!sc_.policy.cfo_compensation) return;
    if (n.phase == NodePhase::Associated && n.serving_bs >= 0 && n.subcarrier &&
        reestimation_due(n.last_estimate_s, now, sc_.policy.reestimation_period_s)) {
        const auto& bs = bss_[static_cast<size_t>(n.serving_bs)];
        const double f = n.subcarrier->center_freq_hz;
        const double preamble_airtime =
            static_cast<double>(Preamble::kLength) / n.subcarrier->bandwidth_hz;
        n.ledger.tx_s += preamble_airtime;                       // uplink training
        n.ledger.rx_s += preamble_airtime + kTurnaroundS;        // downlink reply
        const double snr =
            rss_dbm(n.spec.tx_power_dbm, now_distance(n, bs), sc_.world.propagation) -
            sc_.world.noise_floor_dbm;
        refresh_belief(n, now, snr, sc_.policy.fidelity != Fidelity::Analytic, f);
    }
    queue_.push(now + sc_.policy.reestimation_period_s, kReestimate, node);
}

void Simulator::start_handoff(double now, int node) {
    auto& n = nodes_[static_cast<size_t>(node)];
    if (n.phase != NodePhase::Associated) return;
    n.phase = NodePhase::OutOfRange;
    if (n.serving_bs >= 0) {
        auto& bs = bss_[static_cast<size_t>(n.serving_bs)];
        std::erase(bs.associated, n.spec.id);
        assign_subcarriers(bs);
    }
    n.pending_handoff = HandoffRecord{};
    n.pending_handoff.node_id = n.spec.id;
    n.pending_handoff.from_bs = n.serving_bs >= 0 ? bss_[n.serving_bs].spec.id : "";
    n.pending_handoff.start_s = now;
    n.subcarrier.reset();
    n.belief_valid = sc_.policy.cfo_compensation && n.belief_valid;  // crystal ppm still applies
    n.discovery_rounds = 0;
    n.join_tries = 0;
    ++n.handoffs;
    n.phase = NodePhase::Discovering;
    queue_.push(now, kDiscover, node);
}

namespace {

// Sensor the discovery operation runs against: TV carriers and BS beacon
// bursts audible at the node's position, everything else at the noise
// floor. Beacons are periodic and deterministic, so traces can be built
// for any absolute time.
class WorldSensor : public ChannelSensor {
public:
    WorldSensor(const SpectrumMap& map, const Scenario& sc,
                const std::vector<std::pair<std::string, BsSpec>>& bs_specs,
                const std::vector<Subcarrier>& join_scs, Point where, Rng& rng)
        : map_(map), sc_(sc), bs_(bs_specs), join_(join_scs), where_(where), rng_(rng) {}

    SignalTrace sense(int channel, double center_hz, double bandwidth_hz, double start_s,
                      double dwell_s) override {
        SignalTrace t;
        t.channel = channel;
        t.window_s = dwell_s;
        t.rss_series_dbm.resize(kTraceSamples);
        const double lo = center_hz - bandwidth_hz / 2.0;
        const double hi = center_hz + bandwidth_hz / 2.0;

        double tv_mw = 0.0;
        for (const auto& st : map_.stations()) {
            if (st.channel == channel) tv_mw += dbm_to_mw(map_.rss_at(st, where_));
        }

        for (int k = 0; k < kTraceSamples; ++k) {
            const double tk = start_s + dwell_s * (static_cast<double>(k) + 0.5) / kTraceSamples;
            double mw = dbm_to_mw(sc_.world.noise_floor_dbm) * (1.0 + 0.1 * rng_.gaussian());
            mw = std::max(mw, 1e-30);
            mw += tv_mw;
            for (size_t b = 0; b < bs_.size(); ++b) {
                const auto& spec = bs_[b].second;
                if (spec.channel != channel) continue;
                if (join_[b].center_freq_hz + join_[b].bandwidth_hz / 2.0 <= lo ||
                    join_[b].center_freq_hz - join_[b].bandwidth_hz / 2.0 >= hi)
                    continue;
                const double phase = std::fmod(tk, spec.beacon_period_s);
                if (phase >= spec.beacon_burst_s) continue;
                // Raw link RSS: the height correction calibrates white-space
                // measurements against the contour rules, it is not gain.
                const double rss = Simulator::rss_dbm(spec.tx_power_dbm,
                                                      distance_m(spec.location, where_),
                                                      sc_.world.propagation) +
                                   2.5 * rng_.gaussian();
                mw += dbm_to_mw(rss);
                if (t.source_id.empty()) t.source_id = bs_[b].first;
            }
            t.rss_series_dbm[k] = mw_to_dbm(mw);
        }

        // Mean corrected RSS of the two neighbor channels over the dwell.
        double adj_mw = 0.0;
        int neighbors = 0;
        for (int nb : {channel - 1, channel + 1}) {
            if (!is_tv_channel(nb)) continue;
            ++neighbors;
            double mw = dbm_to_mw(sc_.world.noise_floor_dbm);
            for (const auto& st : map_.stations()) {
                if (st.channel == nb) mw += dbm_to_mw(map_.rss_at(st, where_));
            }
            for (size_t b = 0; b < bs_.size(); ++b) {
                const auto& spec = bs_[b].second;
                if (spec.channel != nb) continue;
                const double duty = spec.beacon_burst_s / spec.beacon_period_s;
                mw += duty * dbm_to_mw(Simulator::rss_dbm(spec.tx_power_dbm,
                                                          distance_m(spec.location, where_),
                                                          sc_.world.propagation));
            }
            adj_mw += mw;
        }
        t.adjacent_rss_dbm = neighbors > 0 ? mw_to_dbm(adj_mw / neighbors) : -300.0;
        return t;
    }

private:
    const SpectrumMap& map_;
    const Scenario& sc_;
    std::vector<std::pair<std::string, BsSpec>> bs_;
    std::vector<Subcarrier> join_;
    Point where_;
    Rng& rng_;
};

// Capture source for alignment: noise plus the beacon of whichever BS is
// bursting on the sensed slice, synthesized through the baseband path.
class WorldCapture : public BandCapture {
public:
    WorldCapture(const Scenario& sc, const SpectrumMap& map,
                 const std::vector<std::pair<std::string, BsSpec>>& bs_specs,
                 const std::vector<Subcarrier>& join_scs, Point where, Rng& rng)
        : sc_(sc), map_(map), bs_(bs_specs), join_(join_scs), where_(where), rng_(rng) {}

    SampleBuffer capture(double center_hz, double rate_hz, double start_s, size_t n) override {
        SampleBuffer buf;
        buf.sample_rate_hz = rate_hz;
        buf.start_time_s = start_s;
        const double sigma = std::sqrt(dbm_to_mw(sc_.world.noise_floor_dbm) / 2.0);
        buf.samples.reserve(n);
        for (size_t i = 0; i < n; ++i)
            buf.samples.emplace_back(rng_.gaussian(0.0, sigma), rng_.gaussian(0.0, sigma));

        for (size_t b = 0; b < bs_.size(); ++b) {
            const auto& spec = bs_[b].second;
            const auto& jsc = join_[b];
            const double offset = jsc.center_freq_hz - center_hz;
            if (std::abs(offset) + jsc.bandwidth_hz / 2.0 > rate_hz / 2.0) continue;
            const double phase = std::fmod(start_s, spec.beacon_period_s);
            if (phase >= spec.beacon_burst_s) continue;
            const double rss = Simulator::rss_dbm(spec.tx_power_dbm,
                                                  distance_m(spec.location, where_),
                                                  sc_.world.propagation);
            const double amp = std::sqrt(dbm_to_mw(rss));
            const auto sps = static_cast<size_t>(std::llround(rate_hz / jsc.bandwidth_hz));
            std::vector<uint8_t> bits(n / std::max<size_t>(1, sps) + 2);
            for (auto& bit : bits) bit = rng_.bernoulli(0.5) ? 1 : 0;
            Subcarrier sc{center_hz + offset, jsc.bandwidth_hz};
            auto sig = modulate(bits, Modulation::Bpsk, sc, rate_hz, center_hz, amp, start_s);
            for (size_t i = 0; i < n && i < sig.samples.size(); ++i)
                buf.samples[i] += sig.samples[i];
        }
        return buf;
    }

private:
    const Scenario& sc_;
    const SpectrumMap& map_;
    std::vector<std::pair<std::string, BsSpec>> bs_;
    std::vector<Subcarrier> join_;
    Point where_;
    Rng& rng_;
};

}  // namespace

void Simulator::on_discover(double now, int node) {
    auto& n = nodes_[static_cast<size_t>(node)];
    if (n.phase != NodePhase::Discovering) return;

    DiscoveryConfig cfg = sc_.policy.discovery;
    // Chasing a verdict the aligner cannot hear just burns the timeout, so
    // the discovery noise gate sits at the alignment busy threshold.
    cfg.sensitivity_dbm =
        std::max(sc_.world.sensitivity_dbm, sc_.policy.alignment.busy_threshold_dbm);
    cfg.noise_floor_dbm = sc_.world.noise_floor_dbm;
    if (n.serving_bs >= 0)
        cfg.narrow_sense_bandwidth_hz = bss_[n.serving_bs].spec.subcarrier_bandwidth_hz;

    std::optional<std::vector<SpectrumMap::ProbePoint>> hint;
    if (sc_.policy.hint_enabled && n.serving_bs >= 0) {
        const auto& prev = bss_[static_cast<size_t>(n.serving_bs)];
        const double r_cov =
            sc_.world.propagation.reference_distance_m *
            std::pow(10.0, (prev.spec.tx_power_dbm - sc_.world.propagation.reference_loss_db -
                            sc_.world.sensitivity_dbm) /
                               (10.0 * sc_.world.propagation.exponent));
        hint = map_.eight_point_channel_list(prev.spec.location, r_cov);
    }
    std::vector<int> full_band;
    for (int ch = kFirstTvChannel; ch <= kLastTvChannel; ++ch) full_band.push_back(ch);
    std::vector<int> preferred;
    if (sc_.policy.channel_cache)
        preferred.assign(n.channel_cache.rbegin(), n.channel_cache.rend());

    ScanPlan plan;
    try {
        plan = build_scan_plan(hint, full_band, sc_.policy.scan_strategy, cfg, preferred);
    } catch (const std::invalid_argument&) {
        plan = build_scan_plan(std::nullopt, full_band, sc_.policy.scan_strategy, cfg, preferred);
    }

    std::vector<std::pair<std::string, BsSpec>> bs_specs;
    std::vector<Subcarrier> join_scs;
    for (const auto& bs : bss_) {
        bs_specs.emplace_back(bs.spec.id, bs.spec);
        join_scs.push_back(bs.join_sc);
    }
    WorldSensor sensor(map_, sc_, bs_specs, join_scs, n.motion.position, n.rng);
    const auto res = discover(plan, sensor, now, sc_.world.energy.rx_power_w(), cfg);

    const double charge = clip_to_horizon(now, res.elapsed_s);
    if (sc_.policy.scan_strategy == ScanStrategy::Wide) n.ledger.rx_wide_s += charge;
    else n.ledger.rx_s += charge;
    n.pending_handoff.discovery_s += res.elapsed_s;
    n.pending_handoff.discovery_j += res.energy_j;
    n.pending_handoff.channels_visited += res.channels_visited;
    n.pending_handoff.dwells += res.dwells;

    if (res.found) {
        int target = -1;
        for (size_t b = 0; b < bss_.size(); ++b)
            if (bss_[b].spec.id == res.bs_id) target = static_cast<int>(b);
        if (target >= 0) {
            n.target_bs = target;
            n.align_center_hz = res.center_hz;
            n.phase = NodePhase::Aligning;
            queue_.push(now + res.elapsed_s, kAlign, node);
            return;
        }
    }
    ++n.discovery_rounds;
    const double backoff = discovery_backoff_s(n.discovery_rounds, sc_.policy.discovery_backoff_base_s,
                                               sc_.policy.discovery_backoff_cap_s);
    queue_.push(now + res.elapsed_s + backoff, kDiscover, node);
}

void Simulator::on_align(double now, int node) {
    auto& n = nodes_[static_cast<size_t>(node)];
    if (n.phase != NodePhase::Aligning || n.target_bs < 0) return;

    std::vector<std::pair<std::string, BsSpec>> bs_specs;
    std::vector<Subcarrier> join_scs;
    for (const auto& bs : bss_) {
        bs_specs.emplace_back(bs.spec.id, bs.spec);
        join_scs.push_back(bs.join_sc);
    }
    WorldCapture capture(sc_, map_, bs_specs, join_scs, n.motion.position, n.rng);
    AlignmentConfig cfg = sc_.policy.alignment;
    const auto res = align(capture, n.align_center_hz, now, sc_.world.energy.rx_power_w(), cfg);

    n.ledger.rx_s += clip_to_horizon(now, res.elapsed_s);
    n.pending_handoff.alignment_s += res.elapsed_s;
    n.pending_handoff.alignment_j += res.energy_j;

    if (res.aligned) {
        n.pending_handoff.detected_bandwidth_hz = res.subcarrier.bandwidth_hz;
        n.align_center_hz = res.subcarrier.center_freq_hz;
        n.phase = NodePhase::Joining;
        n.join_tries = 0;
        queue_.push(now + res.elapsed_s, kJoin, node);
    } else {
        n.phase = NodePhase::Discovering;
        queue_.push(now + res.elapsed_s, kDiscover, node);
    }
}

void Simulator::on_join(double now, int node) {
    auto& n = nodes_[static_cast<size_t>(node)];
    if (n.phase != NodePhase::Joining || n.target_bs < 0) return;
    auto& bs = bss_[static_cast<size_t>(n.target_bs)];
    const double rs = bs.spec.subcarrier_bandwidth_hz;
    const double f_join = bs.join_sc.center_freq_hz;

    // Subcarriers exhausted: the BS turns the request down.
    if (bs.associated.size() >=
        bs.data_scs.size() * static_cast<size_t>(kMaxNodesPerSubcarrier)) {
        ++n.join_rejections;
        n.phase = NodePhase::Discovering;
        queue_.push(now + kTurnaroundS, kDiscover, node);
        return;
    }

    const double defer =
        static_cast<double>(n.rng.uniform_int(8)) * static_cast<double>(kJoinRequestBits) / rs;
    const double req_airtime = static_cast<double>(Preamble::kLength + kJoinRequestBits) / rs;
    const double grant_airtime = static_cast<double>(Preamble::kLength + kJoinGrantBits) / rs;
    const double t0 = now + defer;

    // Request leg (preamble + payload on the join subcarrier).
    const double lo = bs.join_sc.center_freq_hz - rs / 2.0;
    const double hi = bs.join_sc.center_freq_hz + rs / 2.0;
    const bool collision = channel_busy_at(n, t0, lo, hi, 0);
    const uint64_t id = next_tx_id_++;
    ledger_.push_back({t0, t0 + req_airtime, lo, hi, n.spec.tx_power_dbm, n.motion.position, node,
                       n.target_bs, id});
    n.ledger.tx_s += clip_to_horizon(t0, req_airtime);

    const double up_snr = uplink_snr_db(n, bs, t0, t0 + req_airtime, lo, hi, id);
    const double residual = residual_uplink_cfo_hz(n, f_join);
    const bool req_ok = !collision &&
                        rss_dbm(n.spec.tx_power_dbm, now_distance(n, bs), sc_.world.propagation) >=
                            sc_.world.sensitivity_dbm &&
                        !n.rng.bernoulli(packet_error_probability(up_snr, residual, rs,
                                                                  kJoinRequestBits,
                                                                  sc_.policy.modulation));

    // Grant leg (BS estimates the node's CFO off the request preamble,
    // assigns a subcarrier and echoes the pre-compensation value back).
    const double down_rss =
        rss_dbm(bs.spec.tx_power_dbm, now_distance(n, bs), sc_.world.propagation);
    const double down_snr = down_rss - sc_.world.noise_floor_dbm;
    const double grant_window = kTurnaroundS + grant_airtime;
    n.ledger.rx_s += clip_to_horizon(t0 + req_airtime, grant_window);
    const bool grant_ok =
        req_ok && down_rss >= sc_.world.sensitivity_dbm &&
        !n.rng.bernoulli(packet_error_probability(down_snr, 0.0, rs, kJoinGrantBits,
                                                  sc_.policy.modulation));

    const double elapsed = defer + req_airtime + grant_window;
    n.pending_handoff.join_s += elapsed;
    n.pending_handoff.join_j += sc_.world.energy.tx_power_w() * req_airtime +
                                sc_.world.energy.rx_power_w() * grant_window;

    if (grant_ok) {
        // Uplink CFO table at the BS, via the real estimator or its error
        // model depending on fidelity.
        refresh_belief(n, now, up_snr, sc_.policy.fidelity != Fidelity::Analytic, f_join);
        // Downlink estimate at the node from the grant preamble.
        const double true_down = -true_uplink_offset_hz(n, f_join);
        n.downlink_est = make_cfo_estimate(
            true_down + n.rng.gaussian(0.0, estimator_sigma_hz(down_snr)), f_join, now);

        n.serving_bs = n.target_bs;
        n.target_bs = -1;
        n.phase = NodePhase::Associated;
        n.below_range_since_s = -1.0;
        bs.associated.push_back(n.spec.id);
        assign_subcarriers(bs);
        if (sc_.policy.channel_cache) {
            std::erase(n.channel_cache, bs.spec.channel);
            n.channel_cache.push_back(bs.spec.channel);
            while (n.channel_cache.size() > kChannelCacheSize) n.channel_cache.pop_front();
        }
        n.pending_handoff.to_bs = bs.spec.id;
        n.pending_handoff.success = true;
        n.pending_handoff.total_s = n.pending_handoff.discovery_s + n.pending_handoff.alignment_s +
                                    n.pending_handoff.join_s;
        n.pending_handoff.total_j = n.pending_handoff.discovery_j + n.pending_handoff.alignment_j +
                                    n.pending_handoff.join_j;
        handoffs_.push_back(n.pending_handoff);
        if (n.job.remaining > 0) queue_.push(now + elapsed, kCsmaAttempt, node);
        return;
    }

    ++n.join_tries;
    if (n.join_tries < kMaxJoinTries) {
        const double backoff = 0.05 * std::pow(2.0, static_cast<double>(n.join_tries - 1));
        queue_.push(now + elapsed + backoff, kJoin, node);
    } else {
        n.phase = NodePhase::Discovering;
        queue_.push(now + elapsed, kDiscover, node);
    }
}

}  // namespace wssim
