// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0

#include "silt/experiment.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "silt/rng.hpp"

namespace fs = std::filesystem;

namespace silt {

void ExperimentConfig::validate() const {
    if (task != "dsr" && task != "sr" && task != "retarget")
        throw std::invalid_argument("task must be dsr, sr or retarget, got '" + task + "'");
    if (input.empty() == dataset.empty())
        throw std::invalid_argument("exactly one of --input and --dataset is required");
    if (!input.empty() && !fs::exists(input))
        throw std::invalid_argument("input path does not exist: " + input);
    if (!dataset.empty() && !fs::is_directory(dataset))
        throw std::invalid_argument("dataset directory does not exist: " + dataset);
    if ((task == "dsr" || task == "sr") && t < 2)
        throw std::invalid_argument("restoration tasks need --scale >= 2");
    if (sigma_255 < 0) throw std::invalid_argument("--sigma must be nonnegative");
    if (jobs < 1) throw std::invalid_argument("--jobs must be >= 1");
    task_cfg.validate();
}

std::vector<std::string> list_png_files(const std::string& dir) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        if (e.path().extension() == ".png") files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::string path_stem(const std::string& path) { return fs::path(path).stem().string(); }

namespace {

struct RunOutcome {
    ReportRow row;
};

void write_run_artifacts(const fs::path& dir, const RunResult& result) {
    fs::create_directories(dir);
    save_png(result.output, (dir / "output.png").string());
    std::ofstream trace(dir / "trace.jsonl");
    for (const auto& [it, b] : result.trace) {
        nlohmann::json j = {{"iteration", it},
                            {"contextual", b.contextual},
                            {"gen_adv", b.gen_adv},
                            {"disc_adv", b.disc_adv},
                            {"reconstruction", b.reconstruction},
                            {"tv", b.tv},
                            {"total", b.total}};
        trace << j.dump() << "\n";
    }
    std::ofstream cfg(dir / "config.json");
    cfg << result.config_echo.dump(2) << "\n";
}

RunOutcome run_one(const ExperimentConfig& config, const std::string& image_path, uint64_t seed) {
    RunOutcome out;
    out.row.name = path_stem(image_path);
    out.row.seed = seed;
    try {
        const Image clean = load_png(image_path);
        TaskConfig cfg = config.task_cfg;
        cfg.seed = seed;

        RunResult result;
        if (config.task == "retarget") {
            result = run_retarget(clean, config.s_h, config.s_w, cfg);
        } else {
            // Corruption is synthesized from the clean image, never read from
            // disk, so the degradation is exactly what the config says.
            const Image cropped = crop_to_multiple(clean, config.t);
            Image corrupted = downsample(cropped, config.t);
            if (config.task == "dsr" && config.sigma_255 > 0) {
                DegradationConfig noise;
                noise.sigma_255 = config.sigma_255;
                noise.seed = derive_seed(seed, 100);
                corrupted = add_gaussian_noise(corrupted, noise);
            }
            const Image reference = ensure_rgb(cropped);
            result = config.task == "dsr" ? run_dsr(corrupted, config.t, cfg, &reference)
                                          : run_sr(corrupted, config.t, cfg, &reference);
        }
        const fs::path run_dir = fs::path(config.out_dir) /
                                 (config.task + "_" + out.row.name + "_s" + std::to_string(seed));
        write_run_artifacts(run_dir, result);
        out.row.psnr_db = result.psnr_db;
        out.row.ssim_value = result.ssim_value;
        out.row.wall_seconds = result.wall_seconds;
    } catch (const std::exception& e) {
        out.row.ok = false;
        out.row.error = e.what();
    }
    return out;
}

}  // namespace

Report run_experiment(const ExperimentConfig& config) {
    config.validate();
    std::vector<std::string> inputs;
    if (!config.input.empty()) {
        inputs.push_back(config.input);
    } else {
        inputs = list_png_files(config.dataset);
        if (inputs.empty())
            throw std::invalid_argument("dataset directory has no .png files: " + config.dataset);
    }
    fs::create_directories(config.out_dir);

    std::vector<RunOutcome> outcomes(inputs.size());
    const int jobs = std::min<int>(config.jobs, static_cast<int>(inputs.size()));
    if (jobs <= 1) {
        for (size_t i = 0; i < inputs.size(); ++i)
            outcomes[i] = run_one(config, inputs[i], config.task_cfg.seed + i);
    } else {
        // Bounded pool of independent runs; kernel threads are split so the
        // pool does not oversubscribe the machine.
        const int omp_threads = std::max(1, omp_get_max_threads() / jobs);
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < jobs; ++w)
            pool.emplace_back([&, omp_threads] {
                omp_set_num_threads(omp_threads);
                for (size_t i = next.fetch_add(1); i < inputs.size(); i = next.fetch_add(1))
                    outcomes[i] = run_one(config, inputs[i], config.task_cfg.seed + i);
            });
        for (auto& t : pool) t.join();
    }

    Report report;
    double psnr_sum = 0, ssim_sum = 0;
    int metric_rows = 0;
    for (auto& o : outcomes) {
        if (!o.row.ok)
            std::cerr << "warning: skipped " << o.row.name << ": " << o.row.error << "\n";
        if (o.row.ok && o.row.psnr_db && o.row.ssim_value) {
            psnr_sum += *o.row.psnr_db;
            ssim_sum += *o.row.ssim_value;
            ++metric_rows;
        }
        report.rows.push_back(std::move(o.row));
    }
    if (metric_rows > 0) {
        report.mean_psnr = psnr_sum / metric_rows;
        report.mean_ssim = ssim_sum / metric_rows;
    }
    report.config_echo = config.task_cfg.echo();
    report.config_echo["task"] = config.task;
    report.config_echo["t"] = config.t;
    report.config_echo["sigma_255"] = config.sigma_255;
    report.config_echo["s_h"] = config.s_h;
    report.config_echo["s_w"] = config.s_w;
    report.config_echo["dataset"] = config.dataset.empty() ? config.input : config.dataset;
    report.config_echo["jobs"] = config.jobs;
    return report;
}

std::string Report::human_table(const std::string& title) const {
    char line[256];
    std::string out = title + " (toolkit " + version + ")\n";
    std::snprintf(line, sizeof(line), "%-24s %10s %8s %10s %8s\n", "image", "psnr_db", "ssim",
                  "wall_s", "seed");
    out += line;
    out += std::string(64, '-') + "\n";
    for (const auto& r : rows) {
        if (!r.ok) {
            std::snprintf(line, sizeof(line), "%-24s %10s %8s %10s %8s  (skipped: %s)\n",
                          r.name.c_str(), "-", "-", "-", "-", r.error.c_str());
            out += line;
            continue;
        }
        std::snprintf(line, sizeof(line), "%-24s %10s %8s %10.1f %8llu\n", r.name.c_str(),
                      r.psnr_db ? std::to_string(*r.psnr_db).substr(0, 7).c_str() : "-",
                      r.ssim_value ? std::to_string(*r.ssim_value).substr(0, 6).c_str() : "-",
                      r.wall_seconds, static_cast<unsigned long long>(r.seed));
        out += line;
    }
    out += std::string(64, '-') + "\n";
    if (mean_ssim) {
        std::snprintf(line, sizeof(line), "%-24s %10.3f %8.4f\n", "mean",
                      mean_psnr.value_or(0.0), *mean_ssim);
        out += line;
    }
    return out;
}

nlohmann::json Report::to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json j = {{"name", r.name},
                            {"wall_seconds", r.wall_seconds},
                            {"seed", r.seed},
                            {"ok", r.ok}};
        if (r.psnr_db) j["psnr_db"] = *r.psnr_db;
        if (r.ssim_value) j["ssim"] = *r.ssim_value;
        if (!r.ok) j["error"] = r.error;
        rows_json.push_back(j);
    }
    nlohmann::json j = {{"version", version}, {"config", config_echo}, {"rows", rows_json}};
    if (mean_psnr) j["mean_psnr_db"] = *mean_psnr;
    if (mean_ssim) j["mean_ssim"] = *mean_ssim;
    return j;
}

void write_report(const Report& report, const std::string& jsonl_path,
                  const std::string& human_path, const std::string& title) {
    if (!jsonl_path.empty()) {
        const fs::path parent = fs::path(jsonl_path).parent_path();
        if (!parent.empty()) fs::create_directories(parent);
        std::ofstream out(jsonl_path);
        for (const auto& r : report.rows) {
            nlohmann::json j = {{"name", r.name},
                                {"wall_seconds", r.wall_seconds},
                                {"seed", r.seed},
                                {"ok", r.ok}};
            if (r.psnr_db) j["psnr_db"] = *r.psnr_db;
            if (r.ssim_value) j["ssim"] = *r.ssim_value;
            if (!r.ok) j["error"] = r.error;
            out << j.dump() << "\n";
        }
        nlohmann::json summary = {{"row", "mean"}, {"version", report.version}};
        if (report.mean_psnr) summary["psnr_db"] = *report.mean_psnr;
        if (report.mean_ssim) summary["ssim"] = *report.mean_ssim;
        out << summary.dump() << "\n";
    }
    if (!human_path.empty()) {
        std::ofstream out(human_path);
        out << report.human_table(title);
    }
}

}  // namespace silt
