#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace gromov {

/// One CSV file of an experiment; cells are preformatted.
struct CsvTable {
    std::string file = "data.csv";
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::string str() const;
};

std::string csv_cell(double x);
std::string csv_cell(long long x);
inline std::string csv_cell(int x) { return csv_cell((long long)x); }
inline std::string csv_cell(const std::string& s) { return s; }
inline std::string csv_cell(const char* s) { return s; }

struct ExperimentOutput {
    nlohmann::ordered_json report;
    std::vector<CsvTable> tables;  // tables[0] is data.csv
    bool pass = false;
};

struct RunOptions {
    std::optional<uint64_t> seed;  // overrides the config seed
    int jobs = 1;                  // worker threads for independent sweep points
};

/// Parses a config file. Throws CONFIG_INVALID naming the file or the JSON error.
nlohmann::json load_config(const std::string& path);

/// Runs one config. Throws CONFIG_INVALID (message names the field) or any module error.
ExperimentOutput run_experiment(const nlohmann::json& config, const RunOptions& opt = {});

const std::vector<std::string>& experiment_kinds();

struct CatalogEntry {
    std::string name;
    std::string kind;
    int criterion = 0;
    std::string description;
    std::string path;
};
/// Bundled configs in dir sorted by name, keeping names that contain filter.
std::vector<CatalogEntry> list_experiments(const std::string& dir, const std::string& filter = "");

}  // namespace gromov
