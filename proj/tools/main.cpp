#include <atomic>
#include <csignal>
#include <iostream>

#include "cli.hpp"

namespace {
std::atomic<bool> g_interrupted{false};
extern "C" void on_sigint(int) { g_interrupted = true; }
} // namespace

int main(int argc, char **argv) {
    std::signal(SIGINT, on_sigint);
    codeslice::Runtime runtime;
    runtime.interrupted = &g_interrupted;
    return codeslice::cli::run({argv + 1, argv + argc}, runtime, std::cout, std::cerr);
}
