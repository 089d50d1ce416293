#include "slicematch/smtf.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace slicematch {

namespace {

constexpr char kMagic[4] = {'S', 'M', 'T', 'F'};

void put_u32_le(std::string& buf, std::uint32_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
    buf.push_back(static_cast<char>((v >> 16) & 0xff));
    buf.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::size_t SmtfTensor::element_count() const {
    std::size_t n = 1;
    for (std::uint32_t d : dims) {
        n *= d;
    }
    return dims.empty() ? 0 : n;
}

void write_smtf(const std::string& path, const SmtfTensor& tensor) {
    if (tensor.dims.empty()) {
        throw std::invalid_argument("SMTF: tensor must have at least one dimension");
    }
    for (std::uint32_t d : tensor.dims) {
        if (d == 0) {
            throw std::invalid_argument("SMTF: zero-sized dimension");
        }
    }
    if (tensor.data.size() != tensor.element_count()) {
        throw std::invalid_argument("SMTF: payload length does not match dims");
    }

    std::string header;
    header.append(kMagic, 4);
    put_u32_le(header, kSmtfVersion);
    put_u32_le(header, static_cast<std::uint32_t>(tensor.dims.size()));
    for (std::uint32_t d : tensor.dims) {
        put_u32_le(header, d);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("SMTF: cannot open for writing: " + path);
    }
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    std::string payload;
    payload.reserve(tensor.data.size() * 4);
    for (float f : tensor.data) {
        put_u32_le(payload, std::bit_cast<std::uint32_t>(f));
    }
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) {
        throw std::runtime_error("SMTF: write failed: " + path);
    }
}

SmtfTensor read_smtf(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("SMTF: cannot open: " + path);
    }
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::size_t size = bytes.size();

    if (size < 12 || std::memcmp(p, kMagic, 4) != 0) {
        throw std::runtime_error("SMTF: bad magic in " + path);
    }
    const std::uint32_t version = get_u32_le(p + 4);
    if (version != kSmtfVersion) {
        throw std::runtime_error("SMTF: unsupported version in " + path);
    }
    const std::uint32_t ndim = get_u32_le(p + 8);
    if (ndim == 0 || ndim > 8 || size < 12 + 4ull * ndim) {
        throw std::runtime_error("SMTF: bad dimension header in " + path);
    }

    SmtfTensor tensor;
    tensor.dims.resize(ndim);
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < ndim; ++i) {
        tensor.dims[i] = get_u32_le(p + 12 + 4ull * i);
        if (tensor.dims[i] == 0 ||
            count > std::numeric_limits<std::size_t>::max() / tensor.dims[i]) {
            throw std::runtime_error("SMTF: invalid dims in " + path);
        }
        count *= tensor.dims[i];
    }
    const std::size_t offset = 12 + 4ull * ndim;
    if (size != offset + 4 * count) {
        throw std::runtime_error("SMTF: payload size mismatch in " + path);
    }
    tensor.data.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        tensor.data[i] = std::bit_cast<float>(get_u32_le(p + offset + 4 * i));
    }
    return tensor;
}

void write_smtf(const std::string& path, const FeatureMap& map) {
    SmtfTensor t;
    t.dims = {static_cast<std::uint32_t>(map.height), static_cast<std::uint32_t>(map.width),
              static_cast<std::uint32_t>(map.channels)};
    t.data = map.data;
    write_smtf(path, t);
}

FeatureMap read_smtf_feature_map(const std::string& path) {
    SmtfTensor t = read_smtf(path);
    if (t.dims.size() != 3) {
        throw std::runtime_error("SMTF: expected a 3-D feature map in " + path);
    }
    return make_feature_map(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]),
                            static_cast<int>(t.dims[2]), std::move(t.data));
}

}  // namespace slicematch
