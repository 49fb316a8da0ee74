// Acceptance runner: one line per criterion. Failures flagged as documented
// limitations count as expected; any other failure exits 1.
#include "checks/acceptance.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

int main(int argc, char** argv) {
    srep::checks::AcceptanceOptions options;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        const bool has_value = i + 1 < argc;
        if (arg == "--seed" && has_value) {
            options.seed = std::strtoull(argv[++i], nullptr, 10);
        } else if (arg == "--jobs" && has_value) {
            options.jobs = std::strtol(argv[++i], nullptr, 10);
        } else if (arg == "--only" && has_value) {
            options.filter = argv[++i];
        } else if (arg == "--scratch" && has_value) {
            options.scratch_dir = argv[++i];
        } else {
            std::fprintf(stderr,
                         "usage: %s [--seed N] [--jobs N] [--only id-or-name] [--scratch dir]\n",
                         argv[0]);
            return 2;
        }
    }

    options.on_result = [](const srep::checks::CriterionResult& res) {
        std::printf("%s %2d %-28s (%7.2fs) %s%s\n", res.pass ? "PASS" : "FAIL", res.id,
                    res.name.c_str(), res.seconds, res.detail.c_str(),
                    !res.pass && res.known_red ? " [documented limitation]" : "");
        std::fflush(stdout);
    };
    const auto results = srep::checks::run_acceptance(options);

    int failed = 0;
    int documented = 0;
    for (const auto& res : results) {
        if (res.pass) continue;
        ++failed;
        documented += res.known_red ? 1 : 0;
    }
    std::printf("%zu criteria run, %d failed (%d documented)\n", results.size(), failed,
                documented);
    return failed == documented ? 0 : 1;
}
