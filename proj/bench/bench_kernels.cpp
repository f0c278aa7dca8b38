// Serial vs OpenMP timings for the three parallel kernels.
//   bench_kernels [scenario] [seeds] [points]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "roamsim/kernels.hpp"
#include "roamsim/rng.hpp"
#include "roamsim/sim.hpp"

using namespace roamsim;

namespace {

template <typename F>
double time_ms(F&& f, int reps = 3) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

void row(const char* name, double serial, double parallel, bool same) {
    std::printf("%-18s serial %10.2f ms   parallel %10.2f ms   speedup %5.2fx   %s\n", name, serial, parallel,
                serial / parallel, same ? "identical" : "MISMATCH");
}

policy::GeofenceSpec random_fence(std::uint64_t seed) {
    rng::Stream r(seed, "bench-fence");
    policy::GeofenceSpec g;
    g.campus_name = "bench";
    for (int k = 0; k < 8; ++k) {
        const Vec2 c{r.uniform() * 200.0, r.uniform() * 200.0};
        geometry::Polygon poly;
        const int n = 6 + static_cast<int>(r.uniform() * 20);
        for (int i = 0; i < n; ++i) {
            const double a = 2.0 * 3.141592653589793 * i / n;
            const double rad = 10.0 + r.uniform() * 20.0;
            poly.push_back({c.x + rad * std::cos(a), c.y + rad * std::sin(a)});
        }
        g.shapes.push_back(std::move(poly));
    }
    g.shapes.push_back(policy::Circle{{100, 100}, 25.0});
    return g;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string path = argc > 1 ? argv[1] : "data/default_scenario.yaml";
    const int n_seeds = argc > 2 ? std::atoi(argv[2]) : 8;
    const std::size_t n_points = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 1000000;

    const Scenario sc = load_scenario(path);
    std::printf("threads: %d\n", kernels::max_threads());

    const auto& dev = sc.devices.at(0);
    kernels::RadioTrack a, b;
    const double ts = time_ms([&] { a = kernels::radio_track_serial(sc.env, dev.trace, sc.tick_s, sc.tick_count()); });
    const double tp =
        time_ms([&] { b = kernels::radio_track_parallel(sc.env, dev.trace, sc.tick_s, sc.tick_count()); });
    row("radio track", ts, tp, a.ticks == b.ticks);

    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < n_seeds; ++i) seeds.push_back(sc.seed + static_cast<std::uint64_t>(i));
    sim::RunOptions opts;
    opts.keep_log = true;
    opts.signal_samples = false;
    std::vector<sim::RunResult> rs, rp;
    const double ss = time_ms([&] { rs = sim::run_seeds_serial(sc, seeds, opts); }, 1);
    const double sp = time_ms([&] { rp = sim::run_seeds_parallel(sc, seeds, opts); }, 1);
    bool same = rs.size() == rp.size();
    for (std::size_t i = 0; same && i < rs.size(); ++i) same = rs[i].log.to_jsonl() == rp[i].log.to_jsonl();
    row("seed fan-out", ss, sp, same);

    const auto fence = random_fence(7);
    rng::Stream r(11, "bench-points");
    std::vector<Vec2> pts(n_points);
    for (auto& p : pts) p = {r.uniform() * 220.0 - 10.0, r.uniform() * 220.0 - 10.0};
    std::vector<std::uint8_t> cs, cp;
    const double gs = time_ms([&] { cs = kernels::contains_batch_serial(fence, pts); });
    const double gp = time_ms([&] { cp = kernels::contains_batch_parallel(fence, pts); });
    row("geofence batch", gs, gp, cs == cp);
    return 0;
}
