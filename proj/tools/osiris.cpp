// SPDX-License-Identifier: Apache-2.0
//
// Command-line harness: functional simulation at desk scale, analytical
// performance runs at full scale, parameter sweeps, and storage reports.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "osiris/workload.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

void write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream os(out_path);
    if (!os) throw std::runtime_error("cannot open output file: " + out_path);
    os << text;
}

std::string render_report(const osiris::RunReport& rep, const std::string& format) {
    if (format == "json") return osiris::report_to_json(rep).dump(2) + "\n";
    return osiris::report_to_csv(rep);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"osiris: systolic FHE accelerator simulator and performance model"};
    app.require_subcommand(1);

    std::string workload_path, chip_path, out_path, format = "csv", vary = "bsgs_ratio";
    std::optional<osiris::u64> n_override;
    osiris::u64 seed = 1;
    bool trace = false;

    auto add_common = [&](CLI::App* cmd, bool needs_chip) {
        cmd->add_option("--workload", workload_path, "workload JSON file")->required();
        if (needs_chip) cmd->add_option("--chip", chip_path, "chip JSON file")->required();
        cmd->add_option("--out", out_path, "output path (stdout when omitted)");
        cmd->add_option("--format", format, "csv or json")
            ->check(CLI::IsMember({"csv", "json"}));
        cmd->add_option("--seed", seed, "seed for generated data");
        cmd->add_flag("--trace", trace, "emit unit event traces where supported");
    };

    auto* sim = app.add_subcommand("simulate", "functional run with decrypt checks (desk scale)");
    add_common(sim, false);
    sim->add_option("--chip", chip_path, "chip JSON file (optional for simulate)");
    osiris::u64 n_override_raw = 0;
    sim->add_option("--n-override", n_override_raw,
                    "replace the parameter set's ring degree (required above 2^10)");

    auto* perf = app.add_subcommand("perf", "analytical performance run");
    add_common(perf, true);

    auto* sweep = app.add_subcommand("sweep", "sweep one axis and emit plot-ready CSV");
    add_common(sweep, true);
    sweep->add_option("--vary", vary, "bsgs_ratio, bandwidth, or p")
        ->check(CLI::IsMember({"bsgs_ratio", "bandwidth", "p"}));

    auto* storage = app.add_subcommand("storage", "storage calculators for a chip/chain pair");
    storage->add_option("--workload", workload_path, "workload JSON file")->required();
    storage->add_option("--chip", chip_path, "chip JSON file")->required();
    storage->add_option("--out", out_path, "output path");
    storage->add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));

    auto* version = app.add_subcommand("version", "print the version");

    CLI11_PARSE(app, argc, argv);

    try {
        if (version->parsed()) {
            std::cout << "osiris " << kVersion << "\n";
            return 0;
        }

        osiris::WorkloadSpec w = osiris::load_workload(workload_path);
        osiris::ChipConfig chip =
            chip_path.empty() ? osiris::ChipConfig{} : osiris::load_chip(chip_path);

        if (sim->parsed()) {
            if (n_override_raw) n_override = n_override_raw;
            auto res = osiris::run_simulate(w, chip, n_override, seed);
            if (trace) {
                // one desk-scale pass through the pipelined units, traced
                osiris::u64 n = n_override.value_or(64);
                auto chain = w.build_chain(n);
                osiris::Basis basis = chain.q_basis(std::min<osiris::u64>(2, chain.max_level()));
                osiris::Rng trng(seed);
                osiris::LimbMatrix x(basis, n, osiris::Rep::Eval, osiris::Order::Natural);
                for (std::size_t l = 0; l < basis.size(); ++l)
                    for (auto& v : x.data[l]) v = trng.uniform_below(basis[l].value);
                osiris::MdcConfig mcfg;
                mcfg.p = 8;
                mcfg.stages = osiris::log2_exact(n);
                mcfg.interleave_factor = basis.size();
                osiris::MdcUnit unit(mcfg);
                auto traced = unit.run_intt(osiris::to_interleaved(x, 8), true);
                std::string trace_path = out_path.empty() ? "osiris_trace.csv"
                                                          : out_path + ".trace.csv";
                std::ofstream ts(trace_path);
                traced.trace.write_csv(ts);
                std::cerr << "trace written to " << trace_path << "\n";
            }
            write_output(render_report(res.report, format), out_path);
            if (!res.all_passed) {
                std::cerr << "simulate: functional check FAILED\n";
                return 2;
            }
            return 0;
        }

        if (perf->parsed()) {
            std::string text;
            for (double bw : w.bandwidths) {
                auto rep = osiris::run_perf(w, chip, bw);
                text += render_report(rep, format);
            }
            if (trace) {
                // timeline export of the first matvec op at the first bandwidth
                for (const auto& op : w.ops) {
                    if (op.kind != osiris::WorkloadOp::Kind::Matvec) continue;
                    osiris::ChipConfig tchip = chip;
                    tchip.dram_bw_bytes_per_s = w.bandwidths.front();
                    osiris::GscProblem pb;
                    pb.n = w.ring_degree;
                    pb.level = op.level;
                    pb.alpha = w.alpha;
                    pb.n1 = op.n1;
                    pb.n2 = op.n2;
                    pb.d = op.d;
                    pb.diag_source = op.diag_source;
                    auto tl = osiris::schedule_matvec(tchip, pb);
                    std::string tl_path = out_path.empty() ? "osiris_timeline.json"
                                                           : out_path + ".timeline.json";
                    std::ofstream ts(tl_path);
                    ts << osiris::timeline_to_json(tl).dump(2) << "\n";
                    std::cerr << "timeline written to " << tl_path << "\n";
                    break;
                }
            }
            write_output(text, out_path);
            return 0;
        }

        if (sweep->parsed()) {
            std::vector<osiris::SweepPoint> points;
            if (vary == "bsgs_ratio") {
                // factorizations of the first matvec op's diagonal count
                const osiris::WorkloadOp* mv = nullptr;
                for (const auto& op : w.ops)
                    if (op.kind == osiris::WorkloadOp::Kind::Matvec) { mv = &op; break; }
                if (!mv) throw std::runtime_error("sweep bsgs_ratio: workload has no matvec op");
                std::vector<std::pair<osiris::u64, osiris::u64>> factorizations;
                for (osiris::u64 n2 = 1; n2 <= mv->d; n2 *= 2)
                    factorizations.push_back({(mv->d + n2 - 1) / n2, n2});
                points = osiris::run_sweep_points(factorizations.size(), [&](osiris::u64 i) {
                    auto [n1, n2] = factorizations[i];
                    osiris::GscProblem pb;
                    pb.n = w.ring_degree;
                    pb.level = mv->level;
                    pb.alpha = w.alpha;
                    pb.n1 = n1;
                    pb.n2 = n2;
                    pb.d = mv->d;
                    pb.diag_source = mv->diag_source;
                    osiris::SweepPoint pt;
                    osiris::ScheduleTimeline tl;
                    try {
                        tl = osiris::schedule_matvec(chip, pb);
                    } catch (const osiris::SramOverflow& e) {
                        pb.n2 = std::max<osiris::u64>(e.fitting_n2, 1);
                        pb.n1 = (pb.d + pb.n2 - 1) / pb.n2;
                        tl = osiris::schedule_matvec(chip, pb);
                    }
                    osiris::MatvecShape shape{mv->level, mv->d, pb.n1, pb.n2, mv->diag_source};
                    auto counts =
                        osiris::count_matvec(w.ring_degree, w.alpha, shape,
                                             static_cast<int>(mv->mode), chip.word_bits);
                    pt.label = "ratio_" + std::to_string(pb.n1) + "x" + std::to_string(pb.n2);
                    pt.bandwidth = chip.dram_bw_bytes_per_s;
                    pt.p = chip.p;
                    pt.n1 = pb.n1;
                    pt.n2 = pb.n2;
                    pt.cycles = tl.total_cycles;
                    pt.stalls = tl.stall_cycles;
                    pt.stall_fraction = tl.stall_fraction();
                    pt.mults = counts.total_mults_with_twiddle();
                    double secs = static_cast<double>(tl.total_cycles) / chip.clock_hz;
                    pt.utilization = static_cast<double>(pt.mults) / secs /
                                     (static_cast<double>(chip.inventory.total()) * chip.clock_hz);
                    return pt;
                });
            } else if (vary == "bandwidth") {
                points = osiris::run_sweep_points(w.bandwidths.size(), [&](osiris::u64 i) {
                    auto rep = osiris::run_perf(w, chip, w.bandwidths[i]);
                    osiris::SweepPoint pt;
                    pt.label = "bw_" + std::to_string(static_cast<long long>(w.bandwidths[i]));
                    pt.bandwidth = w.bandwidths[i];
                    pt.p = chip.p;
                    pt.cycles = rep.total_cycles;
                    pt.stalls = rep.total_stalls;
                    pt.stall_fraction = rep.total_cycles
                                            ? static_cast<double>(rep.total_stalls) /
                                                  static_cast<double>(rep.total_cycles)
                                            : 0.0;
                    pt.mults = rep.totals.total_mults_with_twiddle();
                    pt.utilization = rep.roofline_point ? rep.roofline_point->utilization : 0.0;
                    return pt;
                });
            } else {  // vary == "p"
                std::vector<osiris::u64> widths{256, 512, 1024, 2048};
                points = osiris::run_sweep_points(widths.size(), [&](osiris::u64 i) {
                    osiris::ChipConfig scaled = chip;
                    scaled.p = widths[i];
                    scaled.mdc.p = widths[i];
                    scaled.bconv.width = widths[i];
                    scaled.hadamard.lanes = widths[i];
                    double f = static_cast<double>(widths[i]) / static_cast<double>(chip.p);
                    scaled.inventory.mdc = static_cast<osiris::u64>(chip.inventory.mdc * f);
                    scaled.inventory.bconv = static_cast<osiris::u64>(chip.inventory.bconv * f);
                    scaled.inventory.hadamard =
                        static_cast<osiris::u64>(chip.inventory.hadamard * f);
                    auto rep = osiris::run_perf(w, scaled, scaled.dram_bw_bytes_per_s * f);
                    osiris::SweepPoint pt;
                    pt.label = "p_" + std::to_string(widths[i]);
                    pt.bandwidth = scaled.dram_bw_bytes_per_s * f;
                    pt.p = widths[i];
                    pt.cycles = rep.total_cycles;
                    pt.stalls = rep.total_stalls;
                    pt.stall_fraction = rep.total_cycles
                                            ? static_cast<double>(rep.total_stalls) /
                                                  static_cast<double>(rep.total_cycles)
                                            : 0.0;
                    pt.mults = rep.totals.total_mults_with_twiddle();
                    pt.utilization = rep.roofline_point ? rep.roofline_point->utilization : 0.0;
                    return pt;
                });
            }
            write_output(osiris::sweep_to_csv(points), out_path);
            return 0;
        }

        if (storage->parsed()) {
            osiris::u64 n_moduli = w.q_bits.size() + w.alpha;
            osiris::u64 top_level = w.q_bits.size() - 1;
            auto r = osiris::storage_report(w.ring_degree, chip.p, chip.mdc.interleave_factor,
                                            chip.word_bits, n_moduli, chip.mdc_instances,
                                            top_level, w.alpha, chip.n2_cap);
            if (format == "json") {
                osiris::json j{{"twiddle_full_bytes", r.twiddle_full_bytes},
                               {"twiddle_decomposed_bytes", r.twiddle_decomposed_bytes},
                               {"mdc_buffer_bytes_per_instance", r.mdc_buffer_bytes_per_instance},
                               {"mdc_buffer_bytes_total", r.mdc_buffer_bytes_total},
                               {"key_working_set_bytes", r.key_working_set_bytes},
                               {"partial_accumulator_bytes", r.partial_accumulator_bytes}};
                write_output(j.dump(2) + "\n", out_path);
            } else {
                std::ostringstream os;
                os << "item,bytes\n"
                   << "twiddle_full," << r.twiddle_full_bytes << "\n"
                   << "twiddle_decomposed," << r.twiddle_decomposed_bytes << "\n"
                   << "mdc_buffers_per_instance," << r.mdc_buffer_bytes_per_instance << "\n"
                   << "mdc_buffers_total," << r.mdc_buffer_bytes_total << "\n"
                   << "key_working_set," << r.key_working_set_bytes << "\n"
                   << "partial_accumulators," << r.partial_accumulator_bytes << "\n";
                write_output(os.str(), out_path);
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
