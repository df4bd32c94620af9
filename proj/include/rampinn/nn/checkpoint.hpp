#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rampinn/nn/tensor.hpp"

namespace rampinn::nn {

struct NamedArray {
    std::string name;
    Shape shape;
    std::vector<float> values;
};

/// Layout on disk: the ASCII line "RAMPINN-CKPT 1 <manifest bytes>\n", a JSON
/// manifest (config plus name/shape/offset per array), then the raw
/// little-endian float32 payload. Round-trips bit-exactly.
struct Checkpoint {
    nlohmann::json config = nlohmann::json::object();
    std::vector<NamedArray> arrays;

    const NamedArray* find(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rampinn::nn
