// Reproducible experiment driver: seeded Monte Carlo PAPR/BER sweeps for the
// four systems, two-pass noise calibration, and CSV/JSON result emission.
#pragma once

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "olshape/channel.hpp"
#include "olshape/constellation.hpp"
#include "olshape/equalizer.hpp"
#include "olshape/precoder.hpp"
#include "olshape/rng.hpp"
#include "olshape/signal.hpp"
#include "olshape/turbo.hpp"

namespace olshape {

inline constexpr int kResultsSchemaVersion = 1;

enum class SystemKind { shaped8, shaped4, uniform4_te, uniform8_te };

inline const char* system_name(SystemKind s) {
    switch (s) {
        case SystemKind::shaped8: return "shaped8";
        case SystemKind::shaped4: return "shaped4";
        case SystemKind::uniform4_te: return "uniform4_te";
        case SystemKind::uniform8_te: return "uniform8_te";
    }
    return "?";
}

inline SystemKind system_from_name(const std::string& s) {
    if (s == "shaped8") return SystemKind::shaped8;
    if (s == "shaped4") return SystemKind::shaped4;
    if (s == "uniform4_te") return SystemKind::uniform4_te;
    if (s == "uniform8_te") return SystemKind::uniform8_te;
    throw std::invalid_argument("unknown system: " + s);
}

inline int system_Q(SystemKind s) {
    return (s == SystemKind::shaped8 || s == SystemKind::uniform8_te) ? 8 : 4;
}
// 8-PAM pairs with code rate 0.6 and 4-PAM with 0.9, so all systems carry
// 1.8 bits/symbol.
inline double system_code_rate(SystemKind s) {
    return (s == SystemKind::shaped8 || s == SystemKind::uniform8_te) ? 0.6 : 0.9;
}
inline bool system_shaped(SystemKind s) {
    return s == SystemKind::shaped8 || s == SystemKind::shaped4;
}

struct ExperimentConfig {
    std::string channel = "A";
    SystemKind system = SystemKind::shaped8;
    double gamma_db = -14.0;             // BER sweeps
    std::vector<double> gamma_grid_db;   // PAPR sweeps
    double tstnr_db = 40.0;
    std::vector<double> sndr_grid_db;
    int frames = 256;
    int papr_frame_symbols = 32768;
    int M = 16;
    int iterations = 12;
    int inner_iterations = 2;
    int block_length = 4096;
    double epsilon = 1e-4;
    std::uint64_t seed = 1;
    std::uint64_t interleaver_seed = 1;
    int max_frame_errors = 200;
    int threads = 1;
    bool early_stop = true;

    double rate() const {
        const int m = system_Q(system) == 8 ? 3 : 2;
        return m * system_code_rate(system);
    }
};

struct SweepPoint {
    double sndr_db = 0.0;
    double gamma_db = 0.0;
    std::uint64_t bits = 0;
    std::uint64_t bit_errors = 0;
    double ber = 0.0;
    int frames_run = 0;
    int frame_errors = 0;
    double pt = 0.0;
    double pr = 0.0;
    double papr_db = 0.0;
    std::uint64_t fallback_count = 0;
    std::uint64_t symbols = 0;
    std::vector<double> iter_ber;  // per outer iteration, averaged over frames
};

struct CcdfRow {
    double gamma_db = 0.0;
    double papr_db = 0.0;  // threshold, p/Pr in dB
    double prob = 0.0;     // P(p/Pr > threshold)
};

struct SweepResult {
    int schema_version = kResultsSchemaVersion;
    std::string kind;  // "papr" or "ber"
    ExperimentConfig config;
    std::vector<SweepPoint> points;
    std::vector<CcdfRow> ccdf;

    bool operator==(const SweepResult&) const = default;
};

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return a.channel == b.channel && a.system == b.system && a.gamma_db == b.gamma_db &&
           a.gamma_grid_db == b.gamma_grid_db && a.tstnr_db == b.tstnr_db &&
           a.sndr_grid_db == b.sndr_grid_db && a.frames == b.frames &&
           a.papr_frame_symbols == b.papr_frame_symbols && a.M == b.M &&
           a.iterations == b.iterations && a.inner_iterations == b.inner_iterations &&
           a.block_length == b.block_length &&
           a.epsilon == b.epsilon && a.seed == b.seed &&
           a.interleaver_seed == b.interleaver_seed && a.max_frame_errors == b.max_frame_errors &&
           a.threads == b.threads && a.early_stop == b.early_stop;
}

inline bool operator==(const SweepPoint& a, const SweepPoint& b) {
    return a.sndr_db == b.sndr_db && a.gamma_db == b.gamma_db && a.bits == b.bits &&
           a.bit_errors == b.bit_errors && a.ber == b.ber && a.frames_run == b.frames_run &&
           a.frame_errors == b.frame_errors && a.pt == b.pt && a.pr == b.pr &&
           a.papr_db == b.papr_db && a.fallback_count == b.fallback_count &&
           a.symbols == b.symbols && a.iter_ber == b.iter_ber;
}

inline bool operator==(const CcdfRow& a, const CcdfRow& b) {
    return a.gamma_db == b.gamma_db && a.papr_db == b.papr_db && a.prob == b.prob;
}

namespace detail {

// Map bits to a symbol frame for the configured system.
inline PrecodeResult map_symbols(std::span<const std::uint8_t> bits, const ChannelModel& ch,
                                 double gamma_lin, const MappingTable& table, bool shaped) {
    if (shaped) return precode_frame(bits, ch, gamma_lin, table);
    PrecodeResult r;
    r.symbols = gray_map(bits, table.constellation());
    return r;
}

}  // namespace detail

// Noiseless shaped (or uniform) transmission statistics: CCDF of p_n/P_r
// and the epsilon-point PAPR per gamma value.
inline SweepResult run_papr_sweep(const ExperimentConfig& cfg) {
    require(!cfg.gamma_grid_db.empty(), "papr sweep: empty gamma grid");
    const ChannelModel ch = resolve_channel(cfg.channel);
    const Constellation c = make_pam(system_Q(cfg.system));
    const MappingTable table(c);
    const std::size_t L = ch.span();
    const std::size_t per_frame = static_cast<std::size_t>(cfg.papr_frame_symbols);
    const std::size_t n_samples = static_cast<std::size_t>(cfg.frames) * (per_frame - L);
    require(static_cast<double>(n_samples) >= 10.0 / cfg.epsilon,
            "papr sweep: frames*symbols below 10/epsilon");

    SweepResult res;
    res.kind = "papr";
    res.config = cfg;
    NoiseSpec quiet{0.0, 0.0};
    for (std::size_t gi = 0; gi < cfg.gamma_grid_db.size(); ++gi) {
        const double gamma_db = cfg.gamma_grid_db[gi];
        const double gamma_lin = db_to_lin(gamma_db);
        std::vector<double> power;
        power.reserve(n_samples);
        double pt_acc = 0.0;
        std::uint64_t pt_n = 0, fallback = 0;
        for (int f = 0; f < cfg.frames; ++f) {
            RandomStream rng = frame_stream(cfg.seed, gi * static_cast<std::size_t>(cfg.frames) +
                                                          static_cast<std::size_t>(f));
            std::vector<std::uint8_t> bits(per_frame * static_cast<std::size_t>(c.m));
            for (auto& b : bits) b = static_cast<std::uint8_t>(rng.bit());
            auto mapped = detail::map_symbols(bits, ch, gamma_lin, table, system_shaped(cfg.system));
            fallback += mapped.fallback_count;
            auto prop = propagate(mapped.symbols, ch, quiet, rng);
            for (std::size_t i = L; i < prop.r.size(); ++i) power.push_back(prop.r[i] * prop.r[i]);
            for (std::size_t i = L; i < mapped.symbols.size(); ++i) {
                pt_acc += mapped.symbols[i] * mapped.symbols[i];
                ++pt_n;
            }
        }
        SweepPoint pt;
        pt.gamma_db = gamma_db;
        pt.symbols = power.size();
        pt.fallback_count = fallback;
        double pr = 0.0;
        for (double p : power) pr += p;
        pr /= static_cast<double>(power.size());
        pt.pr = pr;
        pt.pt = pt_acc / static_cast<double>(pt_n);
        pt.papr_db = lin_to_db(empirical_papr(power, cfg.epsilon));
        res.points.push_back(pt);

        // complementary CDF of p/Pr on a fixed dB grid
        std::vector<double> norm(power.size());
        for (std::size_t i = 0; i < power.size(); ++i) norm[i] = power[i] / pr;
        std::sort(norm.begin(), norm.end());
        for (double th_db = -10.0; th_db <= 13.0 + 1e-9; th_db += 0.25) {
            const double th = db_to_lin(th_db);
            const auto it = std::upper_bound(norm.begin(), norm.end(), th);
            const double prob =
                static_cast<double>(norm.end() - it) / static_cast<double>(norm.size());
            res.ccdf.push_back({gamma_db, th_db, prob});
        }
    }
    return res;
}

namespace detail {

struct FrameOutcome {
    std::uint64_t bit_errors = 0;
    bool frame_error = false;
    std::uint64_t fallback = 0;
    std::vector<double> iter_ber;
};

}  // namespace detail

// Monte Carlo BER over the SNDR grid.  Pilot frames measure the shaped Pt
// and Pr first; each SNDR point then fixes N0 from TSTNR and NA from SNDR.
inline SweepResult run_ber_sweep(
    const ExperimentConfig& cfg,
    const std::function<void(const SweepPoint&)>& on_point = nullptr) {
    require(!cfg.sndr_grid_db.empty(), "ber sweep: empty SNDR grid");
    const ChannelModel ch = resolve_channel(cfg.channel);
    const Constellation c = make_pam(system_Q(cfg.system));
    const MappingTable table(c);
    const bool shaped = system_shaped(cfg.system);
    const double gamma_lin = db_to_lin(cfg.gamma_db);
    const TurboConfig tcfg =
        make_turbo_config(system_code_rate(cfg.system), cfg.block_length, cfg.interleaver_seed, c.m);
    const std::size_t n_sym = static_cast<std::size_t>(tcfg.coded_length / c.m);
    const std::size_t L = ch.span();

    // pass 1: measure transmit and receive power on pilot frames
    const int n_pilot = 8;
    double pt = 0.0, pr = 0.0;
    std::uint64_t n_pt = 0, n_pr = 0;
    NoiseSpec quiet{0.0, 0.0};
    for (int f = 0; f < n_pilot; ++f) {
        RandomStream rng = frame_stream(cfg.seed, 0x80000000ull + static_cast<std::uint64_t>(f));
        std::vector<std::uint8_t> info(static_cast<std::size_t>(cfg.block_length));
        for (auto& b : info) b = static_cast<std::uint8_t>(rng.bit());
        auto coded = turbo_encode(info, tcfg);
        auto mapped = detail::map_symbols(coded, ch, gamma_lin, table, shaped);
        auto prop = propagate(mapped.symbols, ch, quiet, rng);
        for (std::size_t i = L; i < mapped.symbols.size(); ++i) {
            pt += mapped.symbols[i] * mapped.symbols[i];
            ++n_pt;
        }
        for (std::size_t i = L; i < prop.r.size(); ++i) {
            pr += prop.r[i] * prop.r[i];
            ++n_pr;
        }
    }
    pt /= static_cast<double>(n_pt);
    pr /= static_cast<double>(n_pr);

    SweepResult res;
    res.kind = "ber";
    res.config = cfg;
    for (std::size_t pi = 0; pi < cfg.sndr_grid_db.size(); ++pi) {
        const double sndr_db = cfg.sndr_grid_db[pi];
        const NoiseSpec noise = calibrate_noise(pt, cfg.tstnr_db, pr, sndr_db);
        EqualizerConfig eqcfg;
        eqcfg.M = cfg.M;
        eqcfg.max_iterations = cfg.iterations;
        eqcfg.mode = shaped ? EqualizerMode::shaped : EqualizerMode::uniform;
        eqcfg.early_stop = cfg.early_stop;
        eqcfg.decoder_inner_iterations = cfg.inner_iterations;
        const TrellisEqualizer eq(ch, c, gamma_lin, noise, eqcfg);

        auto run_frame = [&](int f) {
            RandomStream rng = frame_stream(
                cfg.seed, (pi + 1) * 0x100000000ull + static_cast<std::uint64_t>(f));
            std::vector<std::uint8_t> info(static_cast<std::size_t>(cfg.block_length));
            for (auto& b : info) b = static_cast<std::uint8_t>(rng.bit());
            auto coded = turbo_encode(info, tcfg);
            auto mapped = detail::map_symbols(coded, ch, gamma_lin, table, shaped);
            auto prop = propagate(mapped.symbols, ch, noise, rng);
            auto rx = iterative_receive(prop.y, eq, tcfg, eqcfg, info);
            detail::FrameOutcome out;
            out.fallback = mapped.fallback_count;
            for (std::size_t i = 0; i < info.size(); ++i)
                out.bit_errors += info[i] != rx.info_bits[i];
            out.frame_error = out.bit_errors > 0;
            out.iter_ber = rx.iteration_ber;
            return out;
        };

        SweepPoint point;
        point.sndr_db = sndr_db;
        point.gamma_db = cfg.gamma_db;
        point.pt = pt;
        point.pr = pr;
        point.iter_ber.assign(static_cast<std::size_t>(cfg.iterations), 0.0);
        const int n_threads = std::max(1, cfg.threads);
        bool stopped = false;
        for (int f0 = 0; f0 < cfg.frames && !stopped; f0 += n_threads) {
            const int chunk = std::min(n_threads, cfg.frames - f0);
            std::vector<detail::FrameOutcome> outs(static_cast<std::size_t>(chunk));
            if (chunk == 1) {
                outs[0] = run_frame(f0);
            } else {
                std::vector<std::thread> pool;
                pool.reserve(static_cast<std::size_t>(chunk));
                for (int t = 0; t < chunk; ++t)
                    pool.emplace_back(
                        [&, t] { outs[static_cast<std::size_t>(t)] = run_frame(f0 + t); });
                for (auto& th : pool) th.join();
            }
            // aggregate strictly in frame order; anything past the stop
            // frame is discarded so the totals do not depend on chunking
            for (int t = 0; t < chunk && !stopped; ++t) {
                const auto& o = outs[static_cast<std::size_t>(t)];
                point.bit_errors += o.bit_errors;
                point.bits += static_cast<std::uint64_t>(cfg.block_length);
                point.frame_errors += o.frame_error ? 1 : 0;
                point.fallback_count += o.fallback;
                point.symbols += n_sym;
                ++point.frames_run;
                for (std::size_t i = 0; i < o.iter_ber.size() && i < point.iter_ber.size(); ++i)
                    point.iter_ber[i] += o.iter_ber[i];
                if (point.frame_errors >= cfg.max_frame_errors) stopped = true;
            }
        }
        for (auto& v : point.iter_ber) v /= std::max(1, point.frames_run);
        point.ber = point.bits ? static_cast<double>(point.bit_errors) /
                                     static_cast<double>(point.bits)
                               : 0.0;
        if (on_point) on_point(point);
        res.points.push_back(std::move(point));
    }
    return res;
}

// ---- serialization ----------------------------------------------------

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string join_doubles(const std::vector<double>& v, char sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += fmt_double(v[i]);
    }
    return out;
}

inline std::vector<double> split_doubles(const std::string& s, char sep) {
    std::vector<double> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep))
        if (!cur.empty()) out.push_back(std::stod(cur));
    return out;
}

inline std::map<std::string, std::string, std::less<>> config_kv(const ExperimentConfig& c) {
    std::map<std::string, std::string, std::less<>> kv;
    kv["channel"] = c.channel;
    kv["system"] = system_name(c.system);
    kv["gamma_db"] = fmt_double(c.gamma_db);
    kv["gamma_grid_db"] = join_doubles(c.gamma_grid_db, ';');
    kv["tstnr_db"] = fmt_double(c.tstnr_db);
    kv["sndr_grid_db"] = join_doubles(c.sndr_grid_db, ';');
    kv["frames"] = std::to_string(c.frames);
    kv["papr_frame_symbols"] = std::to_string(c.papr_frame_symbols);
    kv["M"] = std::to_string(c.M);
    kv["iterations"] = std::to_string(c.iterations);
    kv["inner_iterations"] = std::to_string(c.inner_iterations);
    kv["block_length"] = std::to_string(c.block_length);
    kv["epsilon"] = fmt_double(c.epsilon);
    kv["seed"] = std::to_string(c.seed);
    kv["interleaver_seed"] = std::to_string(c.interleaver_seed);
    kv["max_frame_errors"] = std::to_string(c.max_frame_errors);
    kv["threads"] = std::to_string(c.threads);
    kv["early_stop"] = c.early_stop ? "1" : "0";
    return kv;
}

inline void config_from_kv(ExperimentConfig& c,
                           const std::map<std::string, std::string, std::less<>>& kv) {
    auto get = [&](const char* k) -> const std::string& {
        auto it = kv.find(k);
        if (it == kv.end()) throw std::runtime_error(std::string("results: missing key ") + k);
        return it->second;
    };
    c.channel = get("channel");
    c.system = system_from_name(get("system"));
    c.gamma_db = std::stod(get("gamma_db"));
    c.gamma_grid_db = split_doubles(get("gamma_grid_db"), ';');
    c.tstnr_db = std::stod(get("tstnr_db"));
    c.sndr_grid_db = split_doubles(get("sndr_grid_db"), ';');
    c.frames = std::stoi(get("frames"));
    c.papr_frame_symbols = std::stoi(get("papr_frame_symbols"));
    c.M = std::stoi(get("M"));
    c.iterations = std::stoi(get("iterations"));
    c.inner_iterations = std::stoi(get("inner_iterations"));
    c.block_length = std::stoi(get("block_length"));
    c.epsilon = std::stod(get("epsilon"));
    c.seed = std::stoull(get("seed"));
    c.interleaver_seed = std::stoull(get("interleaver_seed"));
    c.max_frame_errors = std::stoi(get("max_frame_errors"));
    c.threads = std::stoi(get("threads"));
    c.early_stop = get("early_stop") == "1";
}

}  // namespace detail

enum class ResultFormat { csv, json };

inline void emit_results(const SweepResult& res, const std::string& path, ResultFormat format);
inline SweepResult load_results(const std::string& path, ResultFormat format);

inline void emit_results_csv(const SweepResult& res, std::ostream& out) {
    out << "# olshape-results\n";
    out << "# schema_version=" << res.schema_version << "\n";
    out << "# kind=" << res.kind << "\n";
    for (const auto& [k, v] : detail::config_kv(res.config)) out << "# config." << k << "=" << v << "\n";
    out << "sndr_db,gamma_db,bits,bit_errors,ber,frames_run,frame_errors,pt,pr,papr_db,"
           "fallback_count,symbols,iter_ber\n";
    for (const auto& p : res.points) {
        out << detail::fmt_double(p.sndr_db) << ',' << detail::fmt_double(p.gamma_db) << ','
            << p.bits << ',' << p.bit_errors << ',' << detail::fmt_double(p.ber) << ','
            << p.frames_run << ',' << p.frame_errors << ',' << detail::fmt_double(p.pt) << ','
            << detail::fmt_double(p.pr) << ',' << detail::fmt_double(p.papr_db) << ','
            << p.fallback_count << ',' << p.symbols << ','
            << detail::join_doubles(p.iter_ber, ';') << "\n";
    }
    out << "# ccdf gamma_db,papr_db,prob\n";
    for (const auto& r : res.ccdf)
        out << detail::fmt_double(r.gamma_db) << ',' << detail::fmt_double(r.papr_db) << ','
            << detail::fmt_double(r.prob) << "\n";
}

inline SweepResult load_results_csv(std::istream& in) {
    SweepResult res;
    std::map<std::string, std::string, std::less<>> kv;
    std::string line;
    bool in_ccdf = false;
    bool header_seen = false;
    int schema = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.rfind("# ccdf", 0) == 0) {
            in_ccdf = true;
            continue;
        }
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            std::string key = line.substr(2, eq - 2);
            std::string val = line.substr(eq + 1);
            if (key == "schema_version")
                schema = std::stoi(val);
            else if (key == "kind")
                res.kind = val;
            else if (key.rfind("config.", 0) == 0)
                kv[key.substr(7)] = val;
            continue;
        }
        if (!header_seen && !in_ccdf) {
            header_seen = true;  // column header row
            continue;
        }
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (in_ccdf) {
            require(cells.size() == 3, "results: bad ccdf row");
            res.ccdf.push_back({std::stod(cells[0]), std::stod(cells[1]), std::stod(cells[2])});
        } else {
            require(cells.size() >= 12, "results: bad point row");
            SweepPoint p;
            p.sndr_db = std::stod(cells[0]);
            p.gamma_db = std::stod(cells[1]);
            p.bits = std::stoull(cells[2]);
            p.bit_errors = std::stoull(cells[3]);
            p.ber = std::stod(cells[4]);
            p.frames_run = std::stoi(cells[5]);
            p.frame_errors = std::stoi(cells[6]);
            p.pt = std::stod(cells[7]);
            p.pr = std::stod(cells[8]);
            p.papr_db = std::stod(cells[9]);
            p.fallback_count = std::stoull(cells[10]);
            p.symbols = std::stoull(cells[11]);
            if (cells.size() > 12) p.iter_ber = detail::split_doubles(cells[12], ';');
            res.points.push_back(std::move(p));
        }
    }
    require(schema == kResultsSchemaVersion, "results: schema version mismatch");
    res.schema_version = schema;
    detail::config_from_kv(res.config, kv);
    return res;
}

}  // namespace olshape

#include <json.hpp>

namespace olshape {

inline void emit_results_json(const SweepResult& res, std::ostream& out) {
    nlohmann::ordered_json j;
    j["schema_version"] = res.schema_version;
    j["kind"] = res.kind;
    nlohmann::ordered_json jc;
    for (const auto& [k, v] : detail::config_kv(res.config)) jc[k] = v;
    j["config"] = jc;
    j["points"] = nlohmann::ordered_json::array();
    for (const auto& p : res.points) {
        nlohmann::ordered_json jp;
        jp["sndr_db"] = p.sndr_db;
        jp["gamma_db"] = p.gamma_db;
        jp["bits"] = p.bits;
        jp["bit_errors"] = p.bit_errors;
        jp["ber"] = p.ber;
        jp["frames_run"] = p.frames_run;
        jp["frame_errors"] = p.frame_errors;
        jp["pt"] = p.pt;
        jp["pr"] = p.pr;
        jp["papr_db"] = p.papr_db;
        jp["fallback_count"] = p.fallback_count;
        jp["symbols"] = p.symbols;
        jp["iter_ber"] = p.iter_ber;
        j["points"].push_back(jp);
    }
    j["ccdf"] = nlohmann::ordered_json::array();
    for (const auto& r : res.ccdf)
        j["ccdf"].push_back({{"gamma_db", r.gamma_db}, {"papr_db", r.papr_db}, {"prob", r.prob}});
    out << j.dump(2) << "\n";
}

inline SweepResult load_results_json(std::istream& in) {
    nlohmann::json j;
    in >> j;
    SweepResult res;
    require(j.contains("schema_version"), "results: missing schema_version");
    res.schema_version = j["schema_version"].get<int>();
    require(res.schema_version == kResultsSchemaVersion, "results: schema version mismatch");
    res.kind = j["kind"].get<std::string>();
    std::map<std::string, std::string, std::less<>> kv;
    for (auto it = j["config"].begin(); it != j["config"].end(); ++it)
        kv[it.key()] = it.value().get<std::string>();
    detail::config_from_kv(res.config, kv);
    for (const auto& jp : j["points"]) {
        SweepPoint p;
        p.sndr_db = jp["sndr_db"].get<double>();
        p.gamma_db = jp["gamma_db"].get<double>();
        p.bits = jp["bits"].get<std::uint64_t>();
        p.bit_errors = jp["bit_errors"].get<std::uint64_t>();
        p.ber = jp["ber"].get<double>();
        p.frames_run = jp["frames_run"].get<int>();
        p.frame_errors = jp["frame_errors"].get<int>();
        p.pt = jp["pt"].get<double>();
        p.pr = jp["pr"].get<double>();
        p.papr_db = jp["papr_db"].get<double>();
        p.fallback_count = jp["fallback_count"].get<std::uint64_t>();
        p.symbols = jp["symbols"].get<std::uint64_t>();
        p.iter_ber = jp["iter_ber"].get<std::vector<double>>();
        res.points.push_back(std::move(p));
    }
    for (const auto& jr : j["ccdf"])
        res.ccdf.push_back({jr["gamma_db"].get<double>(), jr["papr_db"].get<double>(),
                            jr["prob"].get<double>()});
    return res;
}

inline void emit_results(const SweepResult& res, const std::string& path, ResultFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out.good()) throw std::runtime_error("emit_results: cannot write " + path);
    if (format == ResultFormat::csv)
        emit_results_csv(res, out);
    else
        emit_results_json(res, out);
    out.flush();
    if (!out.good()) throw std::runtime_error("emit_results: write failed for " + path);
}

inline SweepResult load_results(const std::string& path, ResultFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw std::runtime_error("load_results: cannot open " + path);
    return format == ResultFormat::csv ? load_results_csv(in) : load_results_json(in);
}

}  // namespace olshape
