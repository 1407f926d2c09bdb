#pragma once

#include <string>
#include <vector>

namespace fednag {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

struct AcceptanceOptions {
    std::string data_dir;   // searched for MNIST IDX files; empty = env/default
    std::string out_dir = "acceptance-out";
    bool verbose = true;    // print one line per criterion as it finishes
};

/// Runs the full acceptance battery and returns one result per criterion.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts);

/// Writes the deterministic synthetic 10-class IDX dataset used when MNIST
/// is not available; returns the four file paths
/// (train images, train labels, test images, test labels).
std::vector<std::string> write_synthetic_dataset(const std::string& dir);

/// Locates MNIST IDX files under `data_dir` (or FEDNAG_DATA_DIR, or ./data);
/// empty result when not found.
std::vector<std::string> find_mnist(const std::string& data_dir);

}  // namespace fednag
