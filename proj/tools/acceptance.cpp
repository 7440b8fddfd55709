// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per criterion on stdout, supporting
// numbers on stderr. Exit status 1 when any criterion fails.
#include <iostream>

#include <CLI11.hpp>

#include "acceptance_suite.hpp"
#include "ncofdm/parallel.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"acceptance criteria 1-9"};
    ncofdm::acceptance::Options opt;
    app.add_option("--seed", opt.seed, "master seed");
    app.add_option("--threads", opt.threads, "worker threads (0: NCOFDM_THREADS or 1)");
    app.add_option("--only", opt.only, "run only these criteria")->check(CLI::Range(1, 9));
    CLI11_PARSE(app, argc, argv);
    opt.threads = ncofdm::resolve_threads(opt.threads);
    const auto res = ncofdm::acceptance::run(opt, std::cout, std::cerr);
    for (const auto& o : res)
        if (!o.pass)
            return 1;
    return 0;
}
