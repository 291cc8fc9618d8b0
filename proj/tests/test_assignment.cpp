#include <doctest.h>

#include <algorithm>
#include <map>

#include "wssim/assignment.hpp"
#include "wssim/rng.hpp"

using namespace wssim;

namespace {

Subcarrier sc_at(double center) { return {center, 200e3}; }

// Independent route to the same policy: a closed-form index map instead of
// the production walk. Sorted node i lands on subcarrier i / ceil(n/m)
// while the remainder lasts, then the tail is packed at floor(n/m) each.
std::map<std::string, Subcarrier> enumerate_expected(std::vector<MobilityProfile> nodes,
                                                     std::vector<AvailabilityScore> scs) {
    std::stable_sort(nodes.begin(), nodes.end(), [](const auto& a, const auto& b) {
        return std::tie(a.mobility_rate, a.node_id) < std::tie(b.mobility_rate, b.node_id);
    });
    std::stable_sort(scs.begin(), scs.end(), [](const auto& a, const auto& b) {
        return std::tie(a.cell_count, a.subcarrier.center_freq_hz) <
               std::tie(b.cell_count, b.subcarrier.center_freq_hz);
    });
    const size_t n = nodes.size(), m = scs.size();
    std::map<std::string, Subcarrier> out;
    if (n == 0) return out;
    const size_t ceil_share = (n + m - 1) / m;
    const size_t floor_share = n / m;
    const size_t remainder = n % m;
    for (size_t i = 0; i < n; ++i) {
        size_t s;
        if (remainder == 0 || i < remainder * ceil_share) {
            s = i / ceil_share;
        } else {
            s = remainder + (i - remainder * ceil_share) / floor_share;
        }
        out.emplace(nodes[i].node_id, scs[s].subcarrier);
    }
    return out;
}

bool same_assignment(const std::map<std::string, Subcarrier>& a,
                     const std::map<std::string, Subcarrier>& b) {
    if (a.size() != b.size()) return false;
    for (const auto& [id, sc] : a) {
        auto it = b.find(id);
        if (it == b.end()) return false;
        if (it->second.center_freq_hz != sc.center_freq_hz) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("node ordering: stationary first, ties by id") {
    const auto ordered = order_nodes({{"B", 5}, {"A", 0}, {"D", 10}, {"C", 0}});
    REQUIRE(ordered.size() == 4);
    CHECK(ordered[0].node_id == "A");
    CHECK(ordered[1].node_id == "C");
    CHECK(ordered[2].node_id == "B");
    CHECK(ordered[3].node_id == "D");

    const auto ties = order_nodes({{"z", 3}, {"a", 3}, {"m", 3}});
    CHECK(ties[0].node_id == "a");
    CHECK(ties[1].node_id == "m");
    CHECK(ties[2].node_id == "z");

    CHECK(order_nodes({{"solo", 7}}).front().node_id == "solo");
}

TEST_CASE("subcarrier ordering: scarce first, ties by frequency") {
    const auto ordered = order_subcarriers(
        {{sc_at(520e6), 10}, {sc_at(510e6), 3}, {sc_at(505e6), 10}, {sc_at(515e6), 7}});
    CHECK(ordered[0].cell_count == 3);
    CHECK(ordered[1].cell_count == 7);
    CHECK(ordered[2].subcarrier.center_freq_hz == 505e6);
    CHECK(ordered[3].subcarrier.center_freq_hz == 520e6);
}

TEST_CASE("assignment fixed examples") {
    SUBCASE("stationary pair lands on the scarce subcarrier") {
        const auto got = assign({{"a", 0}, {"b", 0}, {"c", 5}, {"d", 10}},
                                {{sc_at(520e6), 10}, {sc_at(510e6), 3}});
        CHECK(got.at("a").center_freq_hz == 510e6);
        CHECK(got.at("b").center_freq_hz == 510e6);
        CHECK(got.at("c").center_freq_hz == 520e6);
        CHECK(got.at("d").center_freq_hz == 520e6);
    }

    SUBCASE("n == m is a bijection") {
        const auto got = assign({{"a", 1}, {"b", 2}, {"c", 3}},
                                {{sc_at(510e6), 1}, {sc_at(520e6), 2}, {sc_at(530e6), 3}});
        CHECK(got.at("a").center_freq_hz == 510e6);
        CHECK(got.at("b").center_freq_hz == 520e6);
        CHECK(got.at("c").center_freq_hz == 530e6);
    }

    SUBCASE("n=5, m=2 splits 3 then 2") {
        const auto got = assign({{"a", 0}, {"b", 1}, {"c", 2}, {"d", 3}, {"e", 4}},
                                {{sc_at(510e6), 1}, {sc_at(520e6), 2}});
        int first = 0, second = 0;
        for (const auto& [id, sc] : got) (sc.center_freq_hz == 510e6 ? first : second)++;
        CHECK(first == 3);
        CHECK(second == 2);
    }

    SUBCASE("no subcarriers with nodes present is an error") {
        CHECK_THROWS_AS(assign({{"a", 0}}, {}), std::invalid_argument);
    }

    SUBCASE("no nodes yields an empty map") {
        CHECK(assign({}, {{sc_at(510e6), 1}}).empty());
    }
}

TEST_CASE("assignment properties hold exhaustively for n, m <= 8") {
    Rng rng(2024);
    for (int n = 0; n <= 8; ++n) {
        for (int m = 1; m <= 8; ++m) {
            // A deterministic profile mix per (n, m), with deliberate ties.
            std::vector<MobilityProfile> nodes;
            for (int i = 0; i < n; ++i)
                nodes.push_back({"n" + std::to_string(i),
                                 static_cast<double>(static_cast<int>(rng.uniform_int(4)) * 5)});
            std::vector<AvailabilityScore> scs;
            for (int s = 0; s < m; ++s)
                scs.push_back({sc_at(500e6 + 1e6 * s), static_cast<int>(rng.uniform_int(5)) * 3});

            const auto got = assign(nodes, scs);
            const auto expected = enumerate_expected(nodes, scs);
            CHECK(same_assignment(got, expected));

            // Totality.
            CHECK(got.size() == static_cast<size_t>(n));
            for (const auto& node : nodes) CHECK(got.count(node.node_id) == 1);

            // Load bound in {floor(n/m), ceil(n/m)}.
            std::map<double, int> load;
            for (const auto& sc : scs) load[sc.subcarrier.center_freq_hz] = 0;
            for (const auto& [id, sc] : got) load[sc.center_freq_hz]++;
            for (const auto& [freq, count] : load) {
                CHECK(count >= n / m);
                CHECK(count <= (n + m - 1) / m);
            }

            // Monotone matching: lower mobility never gets a more widely
            // available subcarrier than a faster node.
            std::map<double, int> cells;
            for (const auto& sc : scs) cells[sc.subcarrier.center_freq_hz] = sc.cell_count;
            for (const auto& u : nodes) {
                for (const auto& v : nodes) {
                    if (u.mobility_rate < v.mobility_rate)
                        CHECK(cells[got.at(u.node_id).center_freq_hz] <=
                              cells[got.at(v.node_id).center_freq_hz]);
                }
            }

            // Permutation invariance of the inputs.
            auto shuffled_nodes = nodes;
            auto shuffled_scs = scs;
            for (size_t i = shuffled_nodes.size(); i > 1; --i)
                std::swap(shuffled_nodes[i - 1], shuffled_nodes[rng.uniform_int(i)]);
            for (size_t i = shuffled_scs.size(); i > 1; --i)
                std::swap(shuffled_scs[i - 1], shuffled_scs[rng.uniform_int(i)]);
            CHECK(same_assignment(got, assign(shuffled_nodes, shuffled_scs)));
        }
    }
}
