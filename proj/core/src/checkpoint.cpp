// Copyright 2026 The mmr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mmr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "mmr/errors.hpp"

namespace mmr {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'M', 'P', 'R', 'M'};

template <class T>
void put(std::vector<std::uint8_t>& out, T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
    template <class T>
    T get() {
        if (b_.size() - pos_ < sizeof(T)) {
            fail(ErrorKind::kCorruption, "checkpoint truncated");
        }
        T v;
        std::memcpy(&v, b_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string str(std::size_t n) {
        if (b_.size() - pos_ < n) {
            fail(ErrorKind::kCorruption, "checkpoint truncated");
        }
        std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == b_.size(); }

private:
    const std::vector<std::uint8_t>& b_;
    std::size_t pos_ = 0;
};

std::vector<std::uint64_t> config_fields(const EncoderConfig& c) {
    return {c.dim, c.text_dim, c.image_dim, c.num_patches, c.heads, c.attn_dim, c.ffn_dim, c.mm_tokens};
}

}  // namespace

std::vector<std::uint8_t> serialize_params(const EncoderParams& params) {
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put(out, kCheckpointVersion);
    const auto fields = config_fields(params.config);
    put(out, static_cast<std::uint32_t>(fields.size()));
    for (auto f : fields) {
        put(out, f);
    }
    std::uint32_t count = 0;
    params.for_each_tensor([&](std::string_view, const double*, std::size_t, std::size_t) { ++count; });
    put(out, count);
    params.for_each_tensor([&](std::string_view name, const double* data, std::size_t rows, std::size_t cols) {
        put(out, static_cast<std::uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        const bool vector = cols == 1;
        put(out, static_cast<std::uint32_t>(vector ? 1 : 2));
        put(out, static_cast<std::uint64_t>(rows));
        if (!vector) {
            put(out, static_cast<std::uint64_t>(cols));
        }
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                put(out, data[c * rows + r]);
            }
        }
    });
    return out;
}

EncoderParams deserialize_params(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        fail(ErrorKind::kFormat, "not a parameter checkpoint (bad magic)");
    }
    Reader r(bytes);
    r.str(4);
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion) {
        fail(ErrorKind::kUnsupportedVersion, "checkpoint version " + std::to_string(version) +
                                                     " (this build reads version " +
                                                     std::to_string(kCheckpointVersion) + ")");
    }
    const auto nfields = r.get<std::uint32_t>();
    if (nfields != 8) {
        fail(ErrorKind::kCorruption, "checkpoint config block has " + std::to_string(nfields) + " fields");
    }
    EncoderConfig config;
    for (std::size_t* f : {&config.dim, &config.text_dim, &config.image_dim, &config.num_patches, &config.heads,
                           &config.attn_dim, &config.ffn_dim, &config.mm_tokens}) {
        *f = static_cast<std::size_t>(r.get<std::uint64_t>());
    }
    try {
        config.validate();
    } catch (const Error& e) {
        fail(ErrorKind::kCorruption, std::string("checkpoint config: ") + e.what());
    }
    EncoderParams params = EncoderParams::zeros(config);
    std::uint32_t expected = 0;
    params.for_each_tensor([&](std::string_view, double*, std::size_t, std::size_t) { ++expected; });
    if (r.get<std::uint32_t>() != expected) {
        fail(ErrorKind::kCorruption, "checkpoint tensor count does not match the config");
    }
    params.for_each_tensor([&](std::string_view name, double* data, std::size_t rows, std::size_t cols) {
        const auto len = r.get<std::uint32_t>();
        if (r.str(len) != name) {
            fail(ErrorKind::kCorruption, "checkpoint tensor table out of order at " + std::string(name));
        }
        const auto ndims = r.get<std::uint32_t>();
        const bool vector = cols == 1;
        if (ndims != (vector ? 1u : 2u)) {
            fail(ErrorKind::kCorruption, "rank mismatch for " + std::string(name));
        }
        const auto r0 = r.get<std::uint64_t>();
        const auto c0 = vector ? 1 : r.get<std::uint64_t>();
        if (r0 != rows || c0 != cols) {
            fail(ErrorKind::kCorruption, "shape mismatch for " + std::string(name));
        }
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t c = 0; c < cols; ++c) {
                data[c * rows + i] = r.get<double>();
            }
        }
    });
    if (!r.done()) {
        fail(ErrorKind::kCorruption, "trailing bytes after the checkpoint tensor table");
    }
    return params;
}

void save_params(const std::filesystem::path& path, const EncoderParams& params) {
    const auto bytes = serialize_params(params);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorKind::kIo, "cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        fail(ErrorKind::kIo, "write failed for " + path.string());
    }
}

EncoderParams load_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::kIo, "cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_params(bytes);
}

}  // namespace mmr
