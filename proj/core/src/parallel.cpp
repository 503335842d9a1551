#include "lampe/parallel.hpp"

#include <cstdlib>
#include <string>

namespace lampe {

namespace {

int resolve_max_threads() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("LAMPE_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap >= 1 && cap < hw) hw = cap;
        } catch (...) {
            // unparseable cap is ignored
        }
    }
    return hw;
}

}  // namespace

int max_threads() {
    // Resolved once: hardware_concurrency re-reads sysfs on every call,
    // which is microseconds per query inside containers.
    static const int cached = resolve_max_threads();
    return cached;
}

}  // namespace lampe
