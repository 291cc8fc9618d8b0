#pragma once

#include <map>
#include <string>
#include <vector>

#include "wssim/baseband.hpp"

namespace wssim {

struct MobilityProfile {
    std::string node_id;
    double mobility_rate = 0.0;  // expected distance per hour; 0 = stationary
};

struct AvailabilityScore {
    Subcarrier subcarrier;
    int cell_count = 0;  // grid cells in BS range where the channel is free
};

// Ascending mobility, ties by node id. Stationary nodes come first.
std::vector<MobilityProfile> order_nodes(std::vector<MobilityProfile> profiles);

// Ascending availability, ties by center frequency. The scarcest
// subcarrier comes first.
std::vector<AvailabilityScore> order_subcarriers(std::vector<AvailabilityScore> scores);

// Walk both orderings in lockstep: the first (n mod m) subcarriers take
// ceil(n/m) nodes, the rest take floor(n/m), so the widely available end
// (and with it the mobile nodes) carries the remainder-free share.
// Ordering of the inputs is not assumed; both are canonicalized first.
std::map<std::string, Subcarrier> assign(const std::vector<MobilityProfile>& nodes,
                                         const std::vector<AvailabilityScore>& subcarriers);

}  // namespace wssim
