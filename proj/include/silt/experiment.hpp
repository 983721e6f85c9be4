// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "silt/tasks.hpp"

namespace silt {

inline constexpr const char* kToolkitVersion = "0.1.0";

struct ExperimentConfig {
    std::string task;     // dsr | sr | retarget
    std::string input;    // single-image mode
    std::string dataset;  // directory mode (flat, *.png)
    std::string out_dir = "runs";
    std::string report_path;  // defaults to <out_dir>/report.jsonl
    int t = 2;
    double sigma_255 = 0.0;
    double s_h = 1.0, s_w = 1.0;
    TaskConfig task_cfg;
    int jobs = 1;

    void validate() const;
};

struct ReportRow {
    std::string name;
    std::optional<double> psnr_db;
    std::optional<double> ssim_value;
    double wall_seconds = 0.0;
    uint64_t seed = 0;
    bool ok = true;
    std::string error;
};

struct Report {
    std::vector<ReportRow> rows;
    std::optional<double> mean_psnr;
    std::optional<double> mean_ssim;
    nlohmann::json config_echo;
    std::string version = kToolkitVersion;

    std::string human_table(const std::string& title) const;
    nlohmann::json to_json() const;
};

/// Runs the configured task over one image or a dataset directory. For
/// dsr/sr the directory holds clean references and the corrupted inputs are
/// synthesized here; metrics compare against the (cropped) clean image.
Report run_experiment(const ExperimentConfig& config);

void write_report(const Report& report, const std::string& jsonl_path,
                  const std::string& human_path, const std::string& title);

/// Flat, non-recursive *.png listing, sorted by filename.
std::vector<std::string> list_png_files(const std::string& dir);

std::string path_stem(const std::string& path);

}  // namespace silt
