#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <vector>

#include "p2ps/errors.hpp"
#include "p2ps/model/pix2pix.hpp"

// Checkpoint file layout (all integers little-endian):
//   magic "P2PS" | u32 version | u32 image_size | u32 in_channels
//   | u32 base_channels | u32 depth | u32 dropout_up_blocks
//   | u64 fingerprint | u64 step | u32 entry_count
//   entries: u32 name_len | name bytes | u8 dtype(0=f32) | u8 rank
//            | rank x u32 extents | f32 values
// Optimizer moments live under the reserved "__opt__/" name prefix.

namespace p2ps::model {

namespace {

constexpr char kMagic[4] = {'P', '2', 'P', 'S'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    put_u32(os, static_cast<std::uint32_t>(v));
    put_u32(os, static_cast<std::uint32_t>(v >> 32));
}

void put_f32(std::ostream& os, float f) { put_u32(os, std::bit_cast<std::uint32_t>(f)); }

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw IoError("checkpoint truncated while reading a 32-bit field");
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& is) {
    const std::uint64_t lo = get_u32(is);
    const std::uint64_t hi = get_u32(is);
    return lo | (hi << 32);
}

struct Entry {
    std::vector<std::uint32_t> extents;
    std::vector<float> values;
};

void write_entry(std::ostream& os, const std::string& name,
                 const std::vector<std::uint32_t>& extents, const float* values,
                 std::size_t count) {
    put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    os.put(static_cast<char>(0));  // dtype f32
    os.put(static_cast<char>(extents.size()));
    std::size_t n = 1;
    for (std::uint32_t e : extents) {
        put_u32(os, e);
        n *= e;
    }
    if (n != count) throw IoError("checkpoint writer: extent/value count mismatch for " + name);
    for (std::size_t i = 0; i < count; ++i) put_f32(os, values[i]);
}

std::pair<std::string, Entry> read_entry(std::istream& is) {
    const std::uint32_t name_len = get_u32(is);
    if (name_len > 4096) throw IoError("checkpoint corrupt: implausible entry name length");
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw IoError("checkpoint truncated inside an entry name");
    const int dtype = is.get();
    const int rank = is.get();
    if (dtype != 0) throw IoError("checkpoint entry '" + name + "' has unsupported dtype tag");
    if (rank < 1 || rank > 4) throw IoError("checkpoint entry '" + name + "' has invalid rank");
    Entry e;
    std::size_t n = 1;
    for (int i = 0; i < rank; ++i) {
        e.extents.push_back(get_u32(is));
        n *= e.extents.back();
    }
    if (n > (1u << 30)) throw IoError("checkpoint entry '" + name + "' is implausibly large");
    e.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        e.values[i] = std::bit_cast<float>(get_u32(is));
    }
    return {std::move(name), std::move(e)};
}

std::vector<std::uint32_t> tensor_extents(const nn::Tensor& t) {
    return {static_cast<std::uint32_t>(t.shape[0]), static_cast<std::uint32_t>(t.shape[1]),
            static_cast<std::uint32_t>(t.shape[2]), static_cast<std::uint32_t>(t.shape[3])};
}

std::string extents_str(const std::vector<std::uint32_t>& e) {
    std::string s = "(";
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(e[i]);
    }
    return s + ")";
}

}  // namespace

ModelConfig CheckpointInfo::to_config() const {
    ModelConfig cfg;
    cfg.image_size = image_size;
    cfg.in_channels = in_channels;
    cfg.base_channels = base_channels;
    cfg.depth = depth;
    cfg.dropout_up_blocks = dropout_up_blocks;
    return cfg;
}

CheckpointInfo peek_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError("not a checkpoint file (bad magic): " + path);
    }
    const std::uint32_t version = get_u32(is);
    if (version != kVersion) {
        throw IoError("unsupported checkpoint version " + std::to_string(version));
    }
    CheckpointInfo info;
    info.image_size = static_cast<int>(get_u32(is));
    info.in_channels = static_cast<int>(get_u32(is));
    info.base_channels = static_cast<int>(get_u32(is));
    info.depth = static_cast<int>(get_u32(is));
    info.dropout_up_blocks = static_cast<int>(get_u32(is));
    const std::uint64_t fp = get_u64(is);
    if (fp != info.to_config().fingerprint()) {
        throw IoError("checkpoint header fingerprint does not match its fields: " + path);
    }
    info.step = static_cast<long long>(get_u64(is));
    return info;
}

void Pix2Pix::save_checkpoint(const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open checkpoint for writing: " + path);

    auto gen_params = gen_.named_params();
    auto gen_bufs = gen_.named_buffers();
    auto disc_params = disc_.named_params();
    auto disc_bufs = disc_.named_buffers();

    const std::uint32_t entry_count =
        static_cast<std::uint32_t>(gen_params.size() + gen_bufs.size() + disc_params.size() +
                                   disc_bufs.size() + 2 * (gen_params.size() + disc_params.size()));

    os.write(kMagic, 4);
    put_u32(os, kVersion);
    put_u32(os, static_cast<std::uint32_t>(cfg_.image_size));
    put_u32(os, static_cast<std::uint32_t>(cfg_.in_channels));
    put_u32(os, static_cast<std::uint32_t>(cfg_.base_channels));
    put_u32(os, static_cast<std::uint32_t>(cfg_.depth));
    put_u32(os, static_cast<std::uint32_t>(cfg_.dropout_up_blocks));
    put_u64(os, cfg_.fingerprint());
    put_u64(os, static_cast<std::uint64_t>(step_));
    put_u32(os, entry_count);

    for (const auto& np : gen_params) {
        write_entry(os, np.name, tensor_extents(np.param->value), np.param->value.data.data(),
                    np.param->value.size());
    }
    for (const auto& nb : gen_bufs) {
        write_entry(os, nb.name, {static_cast<std::uint32_t>(nb.buf->size())}, nb.buf->data(),
                    nb.buf->size());
    }
    for (const auto& np : disc_params) {
        write_entry(os, np.name, tensor_extents(np.param->value), np.param->value.data.data(),
                    np.param->value.size());
    }
    for (const auto& nb : disc_bufs) {
        write_entry(os, nb.name, {static_cast<std::uint32_t>(nb.buf->size())}, nb.buf->data(),
                    nb.buf->size());
    }
    for (std::size_t k = 0; k < gen_params.size(); ++k) {
        const auto& m = g_opt_.first_moment(k);
        const auto& v = g_opt_.second_moment(k);
        write_entry(os, "__opt__/" + gen_params[k].name + ".m",
                    {static_cast<std::uint32_t>(m.size())}, m.data(), m.size());
        write_entry(os, "__opt__/" + gen_params[k].name + ".v",
                    {static_cast<std::uint32_t>(v.size())}, v.data(), v.size());
    }
    for (std::size_t k = 0; k < disc_params.size(); ++k) {
        const auto& m = d_opt_.first_moment(k);
        const auto& v = d_opt_.second_moment(k);
        write_entry(os, "__opt__/" + disc_params[k].name + ".m",
                    {static_cast<std::uint32_t>(m.size())}, m.data(), m.size());
        write_entry(os, "__opt__/" + disc_params[k].name + ".v",
                    {static_cast<std::uint32_t>(v.size())}, v.data(), v.size());
    }
    os.flush();
    if (!os) throw IoError("write failure while saving checkpoint: " + path);
}

void Pix2Pix::load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint: " + path);

    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError("not a checkpoint file (bad magic): " + path);
    }
    const std::uint32_t version = get_u32(is);
    if (version != kVersion) {
        throw IoError("unsupported checkpoint version " + std::to_string(version));
    }

    struct Field {
        const char* name;
        int expected;
    };
    const Field fields[] = {{"image_size", cfg_.image_size},
                            {"in_channels", cfg_.in_channels},
                            {"base_channels", cfg_.base_channels},
                            {"depth", cfg_.depth},
                            {"dropout_up_blocks", cfg_.dropout_up_blocks}};
    for (const auto& f : fields) {
        const std::uint32_t got = get_u32(is);
        if (got != static_cast<std::uint32_t>(f.expected)) {
            throw ConfigError(std::string("checkpoint ") + f.name + " " + std::to_string(got) +
                              " does not match configured " + std::to_string(f.expected));
        }
    }
    const std::uint64_t fp = get_u64(is);
    if (fp != cfg_.fingerprint()) {
        throw ConfigError("checkpoint architecture fingerprint mismatch");
    }
    const std::uint64_t step = get_u64(is);
    const std::uint32_t entry_count = get_u32(is);

    std::map<std::string, Entry> entries;
    for (std::uint32_t i = 0; i < entry_count; ++i) {
        auto [name, e] = read_entry(is);
        if (!entries.emplace(std::move(name), std::move(e)).second) {
            throw IoError("checkpoint contains a duplicate entry");
        }
    }

    auto take = [&entries](const std::string& name,
                           const std::vector<std::uint32_t>& want) -> std::vector<float> {
        auto it = entries.find(name);
        if (it == entries.end()) throw IoError("checkpoint is missing entry '" + name + "'");
        if (it->second.extents != want) {
            throw ConfigError("checkpoint entry '" + name + "' has shape " +
                              extents_str(it->second.extents) + ", expected " + extents_str(want));
        }
        std::vector<float> v = std::move(it->second.values);
        entries.erase(it);
        return v;
    };

    auto gen_params = gen_.named_params();
    auto gen_bufs = gen_.named_buffers();
    auto disc_params = disc_.named_params();
    auto disc_bufs = disc_.named_buffers();

    for (auto& np : gen_params) {
        np.param->value.data = take(np.name, tensor_extents(np.param->value));
    }
    for (auto& nb : gen_bufs) {
        *nb.buf = take(nb.name, {static_cast<std::uint32_t>(nb.buf->size())});
    }
    for (auto& np : disc_params) {
        np.param->value.data = take(np.name, tensor_extents(np.param->value));
    }
    for (auto& nb : disc_bufs) {
        *nb.buf = take(nb.name, {static_cast<std::uint32_t>(nb.buf->size())});
    }
    for (std::size_t k = 0; k < gen_params.size(); ++k) {
        const auto want = static_cast<std::uint32_t>(gen_params[k].param->value.size());
        g_opt_.first_moment(k) = take("__opt__/" + gen_params[k].name + ".m", {want});
        g_opt_.second_moment(k) = take("__opt__/" + gen_params[k].name + ".v", {want});
    }
    for (std::size_t k = 0; k < disc_params.size(); ++k) {
        const auto want = static_cast<std::uint32_t>(disc_params[k].param->value.size());
        d_opt_.first_moment(k) = take("__opt__/" + disc_params[k].name + ".m", {want});
        d_opt_.second_moment(k) = take("__opt__/" + disc_params[k].name + ".v", {want});
    }
    if (!entries.empty()) {
        throw IoError("checkpoint contains an unrecognized entry '" + entries.begin()->first +
                      "'");
    }

    step_ = static_cast<long long>(step);
    g_opt_.set_step_count(step_);
    d_opt_.set_step_count(step_);
}

}  // namespace p2ps::model
