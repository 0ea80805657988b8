#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "olshape/harness.hpp"

using namespace olshape;
using Catch::Approx;

namespace {

ExperimentConfig small_ber_config() {
    ExperimentConfig cfg;
    cfg.channel = "A";
    cfg.system = SystemKind::shaped4;
    cfg.gamma_db = -3.9;
    cfg.tstnr_db = 40.0;
    cfg.sndr_grid_db = {21.0};
    cfg.frames = 3;
    cfg.block_length = 512;
    cfg.iterations = 4;
    cfg.M = 8;
    cfg.seed = 99;
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("papr sweep basics") {
    ExperimentConfig cfg;
    cfg.system = SystemKind::shaped8;
    cfg.gamma_grid_db = {-14.0};
    cfg.frames = 4;
    cfg.papr_frame_symbols = 30000;
    cfg.epsilon = 1e-3;  // small run, keep the sample precondition satisfied
    cfg.seed = 5;

    const auto res = run_papr_sweep(cfg);
    REQUIRE(res.kind == "papr");
    REQUIRE(res.points.size() == 1);
    const auto& p = res.points[0];
    REQUIRE(p.fallback_count == 0);
    REQUIRE(p.papr_db > 0.0);
    REQUIRE(p.papr_db < 12.0);
    // the constraint caps noiseless power at gamma, so PAPR <= gamma/Pr
    REQUIRE(db_to_lin(p.papr_db) * p.pr <= db_to_lin(-14.0) * (1.0 + 1e-9));
    REQUIRE_FALSE(res.ccdf.empty());

    SECTION("insufficient samples rejected") {
        auto bad = cfg;
        bad.epsilon = 1e-9;
        REQUIRE_THROWS_AS(run_papr_sweep(bad), std::invalid_argument);
    }

    SECTION("unshaped equals shaped when gamma is huge") {
        auto open_cfg = cfg;
        open_cfg.gamma_grid_db = {40.0};
        const auto shaped = run_papr_sweep(open_cfg);
        auto uni = open_cfg;
        uni.system = SystemKind::uniform8_te;
        const auto uniform = run_papr_sweep(uni);
        REQUIRE(shaped.points[0].papr_db == Approx(uniform.points[0].papr_db).margin(1e-12));
    }
}

TEST_CASE("calibration closure: generated noise hits the target SNDR") {
    const ChannelModel ch = builtin_channel('A');
    const double pt = 0.93, pr = 0.087;  // arbitrary measured powers
    const double sndr_db = 17.0, tstnr_db = 40.0;
    const NoiseSpec n = calibrate_noise(pt, tstnr_db, pr, sndr_db);
    RandomStream rng(123);
    const std::size_t count = 1'000'000;
    double var = 0.0;
    const double sa = std::sqrt(0.5 * n.NA);
    for (std::size_t i = 0; i < count; ++i) {
        const double v = rng.gaussian(sa);
        var += v * v;
    }
    var /= static_cast<double>(count);
    const double measured_sndr_db = lin_to_db(2.0 * pr / (2.0 * var));
    REQUIRE(measured_sndr_db == Approx(sndr_db).margin(0.05));
}

TEST_CASE("ber sweep determinism and aggregation") {
    const auto cfg = small_ber_config();
    const auto r1 = run_ber_sweep(cfg);
    const auto r2 = run_ber_sweep(cfg);
    REQUIRE(r1 == r2);
    REQUIRE(r1.points.size() == 1);
    REQUIRE(r1.points[0].bits == 3 * 512);

    SECTION("thread count does not change totals") {
        auto threaded = cfg;
        threaded.threads = 3;
        const auto r3 = run_ber_sweep(threaded);
        REQUIRE(r3.points[0].bit_errors == r1.points[0].bit_errors);
        REQUIRE(r3.points[0].ber == r1.points[0].ber);
        REQUIRE(r3.points[0].iter_ber == r1.points[0].iter_ber);
    }

    SECTION("noise-free check point decodes error-free") {
        // uniform transmission: no erasure positions, so one pass suffices
        auto clean = cfg;
        clean.system = SystemKind::uniform4_te;
        clean.sndr_grid_db = {80.0};
        clean.tstnr_db = 90.0;
        const auto r = run_ber_sweep(clean);
        REQUIRE(r.points[0].bit_errors == 0);
    }
}

TEST_CASE("results round trip") {
    auto cfg = small_ber_config();
    const auto res = run_ber_sweep(cfg);

    SECTION("csv") {
        emit_results(res, "rt.csv", ResultFormat::csv);
        const auto back = load_results("rt.csv", ResultFormat::csv);
        REQUIRE(back == res);
    }
    SECTION("json") {
        emit_results(res, "rt.json", ResultFormat::json);
        const auto back = load_results("rt.json", ResultFormat::json);
        REQUIRE(back == res);
    }
    SECTION("equal seeds emit byte-identical csv") {
        const auto res2 = run_ber_sweep(cfg);
        emit_results(res, "rt_a.csv", ResultFormat::csv);
        emit_results(res2, "rt_b.csv", ResultFormat::csv);
        REQUIRE(slurp("rt_a.csv") == slurp("rt_b.csv"));
    }
    SECTION("schema version is checked on load") {
        emit_results(res, "rt_bad.csv", ResultFormat::csv);
        auto text = slurp("rt_bad.csv");
        const auto pos = text.find("schema_version=1");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 16, "schema_version=9");
        {
            std::ofstream out("rt_bad.csv", std::ios::binary);
            out << text;
        }
        REQUIRE_THROWS(load_results("rt_bad.csv", ResultFormat::csv));
    }
    SECTION("unwritable path surfaces the path") {
        REQUIRE_THROWS_WITH(emit_results(res, "/no/such/dir/x.csv", ResultFormat::csv),
                            Catch::Matchers::ContainsSubstring("/no/such/dir/x.csv"));
    }
}

TEST_CASE("papr ccdf rows are self-consistent") {
    ExperimentConfig cfg;
    cfg.system = SystemKind::uniform4_te;
    cfg.gamma_grid_db = {0.0};
    cfg.frames = 2;
    cfg.papr_frame_symbols = 30000;
    cfg.epsilon = 1e-3;
    const auto res = run_papr_sweep(cfg);
    double prev = 1.1;
    for (const auto& row : res.ccdf) {
        REQUIRE(row.prob <= prev + 1e-12);  // CCDF non-increasing in threshold
        prev = row.prob;
        REQUIRE(row.prob >= 0.0);
        REQUIRE(row.prob <= 1.0);
    }
}
