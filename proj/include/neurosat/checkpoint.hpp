#pragma once
// Checkpoint serialization for parameter trees: magic "NSATCKPT", a little-
// endian u32 format version, a JSON header carrying hyperparameters plus leaf
// names/shapes, then every leaf's data as little-endian IEEE-754 doubles in
// header order. Saving the same tree twice produces identical bytes.

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include <json.hpp>

#include "neurosat/nn.hpp"
#include "neurosat/tensor.hpp"
#include "neurosat/util.hpp"

namespace neurosat {

inline constexpr char kCheckpointMagic[9] = "NSATCKPT";  // 8 bytes on disk
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    nlohmann::json hyperparams;
    ParamTree params;
};

namespace detail {

inline void append_u32_le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void append_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void append_double_le(std::string& out, double v) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    append_u64_le(out, bits);
}

class ByteReader {
  public:
    explicit ByteReader(const std::string& buf) : buf_(&buf) {}

    std::string take(std::size_t n) {
        NS_CHECK(pos_ + n <= buf_->size(), "checkpoint: truncated file");
        std::string out = buf_->substr(pos_, n);
        pos_ += n;
        return out;
    }

    std::uint32_t take_u32_le() {
        std::string b = take(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[static_cast<std::size_t>(i)]);
        return v;
    }

    std::uint64_t take_u64_le() {
        std::string b = take(8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[static_cast<std::size_t>(i)]);
        return v;
    }

    double take_double_le() {
        std::uint64_t bits = take_u64_le();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }

    bool exhausted() const { return pos_ == buf_->size(); }

  private:
    const std::string* buf_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_checkpoint(const ParamTree& tree, const nlohmann::json& hyperparams) {
    nlohmann::json header;
    header["hyperparams"] = hyperparams;
    header["leaves"] = nlohmann::json::array();
    for (const ParamLeaf& leaf : tree.leaves())
        header["leaves"].push_back({{"name", leaf.name}, {"shape", leaf.value.shape}});
    std::string header_bytes = header.dump();

    std::string out(kCheckpointMagic, 8);
    detail::append_u32_le(out, kCheckpointVersion);
    detail::append_u64_le(out, header_bytes.size());
    out += header_bytes;
    for (const ParamLeaf& leaf : tree.leaves())
        for (real v : leaf.value.data) detail::append_double_le(out, static_cast<double>(v));
    return out;
}

inline Checkpoint deserialize_checkpoint(const std::string& bytes) {
    detail::ByteReader reader(bytes);
    NS_CHECK(reader.take(8) == std::string(kCheckpointMagic, 8), "checkpoint: bad magic");
    std::uint32_t version = reader.take_u32_le();
    NS_CHECK(version == kCheckpointVersion,
             "checkpoint: unsupported version " + std::to_string(version));
    std::uint64_t header_len = reader.take_u64_le();
    nlohmann::json header = nlohmann::json::parse(reader.take(header_len));

    Checkpoint ckpt;
    ckpt.hyperparams = header.at("hyperparams");
    for (const nlohmann::json& entry : header.at("leaves")) {
        Tensor value(entry.at("shape").get<std::vector<int>>());
        for (real& v : value.data) v = static_cast<real>(reader.take_double_le());
        ckpt.params.add(entry.at("name").get<std::string>(), std::move(value));
    }
    NS_CHECK(reader.exhausted(), "checkpoint: trailing bytes");
    return ckpt;
}

inline void save_checkpoint(const std::string& path, const ParamTree& tree,
                            const nlohmann::json& hyperparams) {
    write_file(path, serialize_checkpoint(tree, hyperparams));
}

inline Checkpoint load_checkpoint(const std::string& path) {
    return deserialize_checkpoint(read_file(path));
}

}  // namespace neurosat
