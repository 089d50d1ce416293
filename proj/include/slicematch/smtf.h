#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slicematch/tensor.h"

namespace slicematch {

// SMTF binary tensor file: magic "SMTF", u32-LE version (= 1), u32-LE ndim,
// ndim x u32-LE dims, then f32-LE payload, row-major channel-minor.
inline constexpr std::uint32_t kSmtfVersion = 1;

struct SmtfTensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> data;

    std::size_t element_count() const;
};

void write_smtf(const std::string& path, const SmtfTensor& tensor);
SmtfTensor read_smtf(const std::string& path);

/// FeatureMap bridge: dims are stored as {height, width, channels}.
void write_smtf(const std::string& path, const FeatureMap& map);
FeatureMap read_smtf_feature_map(const std::string& path);

}  // namespace slicematch
