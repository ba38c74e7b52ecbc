#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cpinn/data.hpp"
#include "cpinn/network.hpp"
#include "cpinn/recurrent.hpp"
#include "cpinn/selection.hpp"
#include "cpinn/trainer.hpp"

namespace cpinn {

inline constexpr int kCheckpointVersion = 1;

/// A single network: JSON object with fields
/// `format` ("cpinn-network"), `version`, `role`, `seed`, `layer_sizes`, `parameters` (flatten() order).
struct NetworkCheckpoint {
    std::string role;
    std::uint64_t seed = 0;
    MlpParams params;
};

void save_network(const std::filesystem::path& path, const NetworkCheckpoint& ckpt);
NetworkCheckpoint load_network(const std::filesystem::path& path);

/// Everything trained for one combination; written after each candidate finishes so an
/// interrupted discovery run can resume.
struct CandidateCheckpoint {
    std::string config_hash;
    CandidateResult result;
    DomainSpec domain;
    NetworkCheckpoint netu;
    NetworkCheckpoint netg;
    std::optional<RpModel> rp;
    RpConfig rp_config;
    /// Sensor readings available to measurement-fed lags.
    std::vector<Sample> measurements;
    std::vector<OuterRecord> history;
};

void save_candidate(const std::filesystem::path& path, const CandidateCheckpoint& ckpt);
CandidateCheckpoint load_candidate(const std::filesystem::path& path);

} // namespace cpinn
