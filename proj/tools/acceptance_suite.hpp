// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace ncofdm::acceptance {

struct Options {
    std::uint64_t seed = 1;
    int threads = 0;
    std::vector<int> only;  // empty: all criteria
};

struct Outcome {
    int id = 0;
    bool pass = false;
    std::string summary;
    double seconds = 0.0;
};

// Runs criteria 1-9 in order. Supporting numbers go to `log`, one
// PASS/FAIL line per criterion to `out`.
std::vector<Outcome> run(const Options& opt, std::ostream& out, std::ostream& log);

}  // namespace ncofdm::acceptance
