#include "wssim/assignment.hpp"

#include <algorithm>
#include <stdexcept>

namespace wssim {

std::vector<MobilityProfile> order_nodes(std::vector<MobilityProfile> profiles) {
    std::sort(profiles.begin(), profiles.end(), [](const auto& a, const auto& b) {
        if (a.mobility_rate != b.mobility_rate) return a.mobility_rate < b.mobility_rate;
        return a.node_id < b.node_id;
    });
    return profiles;
}

std::vector<AvailabilityScore> order_subcarriers(std::vector<AvailabilityScore> scores) {
    std::sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
        if (a.cell_count != b.cell_count) return a.cell_count < b.cell_count;
        return a.subcarrier.center_freq_hz < b.subcarrier.center_freq_hz;
    });
    return scores;
}

std::map<std::string, Subcarrier> assign(const std::vector<MobilityProfile>& nodes,
                                         const std::vector<AvailabilityScore>& subcarriers) {
    std::map<std::string, Subcarrier> out;
    if (nodes.empty()) return out;
    if (subcarriers.empty())
        throw std::invalid_argument("assign: no subcarriers for a non-empty node set");

    const auto ordered_nodes = order_nodes(nodes);
    const auto ordered_scs = order_subcarriers(subcarriers);
    const size_t n = ordered_nodes.size();
    const size_t m = ordered_scs.size();
    const size_t base = n / m;
    const size_t remainder = n % m;

    size_t next = 0;
    for (size_t s = 0; s < m && next < n; ++s) {
        const size_t share = base + (s < remainder ? 1 : 0);
        for (size_t k = 0; k < share && next < n; ++k, ++next)
            out.emplace(ordered_nodes[next].node_id, ordered_scs[s].subcarrier);
    }
    return out;
}

}  // namespace wssim
