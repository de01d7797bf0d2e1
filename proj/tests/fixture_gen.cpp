#include <cstdio>
#include <exception>

#include "fixture.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: %s <output-dir>\n", argv[0]);
        return 2;
    }
    try {
        auto config = mci::testing::build_replay_fixture(argv[1]);
        std::printf("%s\n", config.string().c_str());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "fixture generation failed: %s\n", e.what());
        return 1;
    }
    return 0;
}
