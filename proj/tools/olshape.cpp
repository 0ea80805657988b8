// Command-line driver: PAPR/BER sweeps, theoretical bounds, mapping-table
// and channel-tap dumps.  Results go to CSV or JSON files.
#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "olshape/bounds.hpp"
#include "olshape/harness.hpp"

using namespace olshape;

namespace {

ResultFormat format_from(const std::string& s) {
    if (s == "csv") return ResultFormat::csv;
    if (s == "json") return ResultFormat::json;
    throw CLI::ValidationError("format must be csv or json");
}

void add_common(CLI::App* cmd, ExperimentConfig& cfg, std::string& system) {
    cmd->set_config("--config", "", "key=value config file; flags override");
    cmd->add_option("--channel", cfg.channel, "A, B, or a tap file path");
    cmd->add_option("--system", system, "shaped8|shaped4|uniform4_te|uniform8_te");
    cmd->add_option("--tstnr", cfg.tstnr_db, "TSTNR in dB");
    cmd->add_option("--frames", cfg.frames, "frame budget");
    cmd->add_option("--M", cfg.M, "M-BCJR survivor count");
    cmd->add_option("--iterations", cfg.iterations, "turbo-equalization iterations");
    cmd->add_option("--inner-iterations", cfg.inner_iterations,
                    "decoder rounds per equalizer pass");
    cmd->add_option("--block-length", cfg.block_length, "info bits per frame");
    cmd->add_option("--epsilon", cfg.epsilon, "PAPR exceedance probability");
    cmd->add_option("--seed", cfg.seed, "master seed");
    cmd->add_option("--interleaver-seed", cfg.interleaver_seed, "turbo interleaver seed");
    cmd->add_option("--threads", cfg.threads, "worker threads per point");
    cmd->add_flag("--no-early-stop", [&cfg](std::int64_t) { cfg.early_stop = false; },
                  "always run the full iteration budget");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online-shaped PAM over ISI channels: simulator and bounds toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file; flags override");

    ExperimentConfig cfg;
    std::string system = "shaped8";
    std::string out_path = "results.csv";
    std::string format = "csv";

    auto* papr = app.add_subcommand("papr", "noiseless PAPR sweep over a gamma grid");
    add_common(papr, cfg, system);
    papr->add_option("--gamma-grid", cfg.gamma_grid_db, "gamma values in dB")->expected(-1);
    papr->add_option("--frame-symbols", cfg.papr_frame_symbols, "symbols per frame");
    papr->add_option("--out", out_path, "output file");
    papr->add_option("--format", format, "csv or json");

    auto* ber = app.add_subcommand("ber", "Monte Carlo BER vs SNDR");
    add_common(ber, cfg, system);
    std::string mode_override;
    std::string interleaver_out;
    ber->add_option("--gamma", cfg.gamma_db, "peak power constraint in dB");
    ber->add_option("--sndr-grid", cfg.sndr_grid_db, "SNDR values in dB")->expected(-1);
    ber->add_option("--max-frame-errors", cfg.max_frame_errors, "stop point per SNDR");
    ber->add_option("--mode", mode_override,
                    "shaped|uniform: overrides the shaping of --system");
    ber->add_option("--export-interleaver", interleaver_out,
                    "write the turbo interleaver permutation to this CSV");
    ber->add_option("--out", out_path, "output file");
    ber->add_option("--format", format, "csv or json");

    auto* bounds_cmd = app.add_subcommand("bounds", "theoretical shaping gains over gamma");
    std::string b_channel = "A";
    double b_tstnr = 40.0, b_rate = 1.8, b_papr_uniform = 10.13;
    std::vector<double> b_gamma_grid;
    std::string b_out = "-";
    bounds_cmd->add_option("--channel", b_channel, "A, B, or a tap file path");
    bounds_cmd->add_option("--tstnr", b_tstnr, "TSTNR in dB");
    bounds_cmd->add_option("--rate", b_rate, "target rate, bits/symbol");
    bounds_cmd->add_option("--gamma-grid", b_gamma_grid, "gamma values in dB")->expected(-1);
    bounds_cmd->add_option("--papr-uniform", b_papr_uniform,
                           "empirical uniform 4-PAM receiver PAPR in dB");
    bounds_cmd->add_option("--out", b_out, "output CSV ('-' for stdout)");

    auto* table_cmd = app.add_subcommand("table", "dump the mapping table as CSV");
    int t_Q = 4;
    std::string t_out = "-";
    table_cmd->add_option("--Q", t_Q, "constellation size");
    table_cmd->add_option("--out", t_out, "output CSV ('-' for stdout)");

    auto* channel_cmd = app.add_subcommand("channel", "print channel taps, one per line");
    std::string c_channel = "A";
    std::string c_out = "-";
    channel_cmd->add_option("--channel", c_channel, "A, B, or a tap file path");
    channel_cmd->add_option("--out", c_out, "output ('-' for stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        cfg.system = system_from_name(system);
        auto open_out = [](const std::string& p) -> std::unique_ptr<std::ostream> {
            if (p == "-") return nullptr;
            auto f = std::make_unique<std::ofstream>(p, std::ios::binary);
            if (!f->good()) throw std::runtime_error("cannot write " + p);
            return f;
        };

        if (papr->parsed()) {
            if (cfg.gamma_grid_db.empty()) cfg.gamma_grid_db = {cfg.gamma_db};
            SweepResult res = run_papr_sweep(cfg);
            emit_results(res, out_path, format_from(format));
            for (const auto& p : res.points)
                std::printf("gamma %+6.2f dB  ->  PAPR %7.3f dB  (Pr %.6g, fallback %llu)\n",
                            p.gamma_db, p.papr_db, p.pr,
                            static_cast<unsigned long long>(p.fallback_count));
            std::printf("wrote %s\n", out_path.c_str());
        } else if (ber->parsed()) {
            if (mode_override == "uniform") {
                cfg.system = system_Q(cfg.system) == 8 ? SystemKind::uniform8_te
                                                       : SystemKind::uniform4_te;
            } else if (mode_override == "shaped") {
                cfg.system =
                    system_Q(cfg.system) == 8 ? SystemKind::shaped8 : SystemKind::shaped4;
            } else if (!mode_override.empty()) {
                throw std::runtime_error("--mode must be shaped or uniform");
            }
            if (!interleaver_out.empty()) {
                const auto tcfg =
                    make_turbo_config(system_code_rate(cfg.system), cfg.block_length,
                                      cfg.interleaver_seed, make_pam(system_Q(cfg.system)).m);
                std::ofstream f(interleaver_out, std::ios::binary);
                if (!f.good()) throw std::runtime_error("cannot write " + interleaver_out);
                write_interleaver_csv(tcfg, f);
            }
            SweepResult res = run_ber_sweep(cfg, [](const SweepPoint& p) {
                std::printf("SNDR %6.2f dB  ->  BER %.3e  (%llu/%llu bits, %d frames)\n",
                            p.sndr_db, p.ber, static_cast<unsigned long long>(p.bit_errors),
                            static_cast<unsigned long long>(p.bits), p.frames_run);
                std::fflush(stdout);
            });
            emit_results(res, out_path, format_from(format));
            std::printf("wrote %s\n", out_path.c_str());
        } else if (bounds_cmd->parsed()) {
            if (b_gamma_grid.empty())
                for (double g = -16.0; g <= 0.0 + 1e-9; g += 1.0) b_gamma_grid.push_back(g);
            const ChannelModel ch = resolve_channel(b_channel);
            auto sink = open_out(b_out);
            std::ostream& os = sink ? *sink : std::cout;
            os << "gamma_db,papr_tg_db,papr_gain_db,sndr_gain_db,g_t_db\n";
            for (double g : b_gamma_grid) {
                const auto gain =
                    theoretical_gain(ch, b_rate, b_tstnr, db_to_lin(g), b_papr_uniform);
                char buf[160];
                std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.6g,%.6g,%.6g\n", g, gain.papr_tg_db,
                              gain.papr_gain_db, gain.sndr_gain_db, gain.g_t_db);
                os << buf;
            }
        } else if (table_cmd->parsed()) {
            const Constellation c = make_pam(t_Q);
            const MappingTable table(c);
            auto sink = open_out(t_out);
            std::ostream& os = sink ? *sink : std::cout;
            os << "row";
            std::vector<int> label_cols;  // column order: labels of ascending points
            for (int i = 0; i < c.Q; ++i) label_cols.push_back(static_cast<int>(c.label(i)));
            for (int lab : label_cols) {
                os << ',';
                for (int b = c.m - 1; b >= 0; --b) os << ((lab >> b) & 1);
            }
            os << "\n";
            for (ForbiddenMask mask = 0; mask < (1u << c.Q); ++mask) {
                os << mask;
                const auto& row = table.row(mask);
                for (int lab : label_cols) {
                    if (row.fallback)
                        os << ",-";
                    else
                        os << ',' << c.point(row.point_of_label[static_cast<std::size_t>(lab)]) /
                                         c.scale;
                }
                os << "\n";
            }
        } else if (channel_cmd->parsed()) {
            const ChannelModel ch = resolve_channel(c_channel);
            auto sink = open_out(c_out);
            std::ostream& os = sink ? *sink : std::cout;
            for (double h : ch.taps) {
                char buf[40];
                std::snprintf(buf, sizeof buf, "%.17g\n", h);
                os << buf;
            }
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
