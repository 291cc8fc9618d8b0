#pragma once

#include <map>
#include <string>

#include "wssim/scenario.hpp"

namespace wssim {

// Bundled scenarios: the indoor hallway walk, the metropolitan vehicle
// runs (CFO on/off pair, stationary baseline, distance family), the
// two-BS handoff corridor, the energy baseline and the fidelity
// cross-check. Keys are fixture names, values are scenario file text.
std::map<std::string, std::string> bundled_fixtures();

// Parsed form of one bundled fixture; throws if the name is unknown.
Scenario fixture_scenario(const std::string& name);

// Write every fixture under dir (one .scn per fixture).
void write_fixtures(const std::string& dir);

}  // namespace wssim
