#include "sclr/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "sclr/errors.hpp"

namespace sclr {

namespace {

constexpr char kMagic[4] = {'S', 'C', 'L', 'R'};
constexpr std::uint32_t kVersion = 1;

void put_u16(std::string& buf, std::uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& buf, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(buf, bits);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    const std::string path;

    void need(std::size_t n, const std::string& what) const {
        if (pos + n > buf.size())
            throw IoError("'" + path + "': truncated while reading " + what);
    }
    std::uint16_t u16(const std::string& what) {
        need(2, what);
        const auto* p = reinterpret_cast<const unsigned char*>(buf.data() + pos);
        pos += 2;
        return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
    }
    std::uint32_t u32(const std::string& what) {
        need(4, what);
        const auto* p = reinterpret_cast<const unsigned char*>(buf.data() + pos);
        pos += 4;
        return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
               (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    }
    std::uint64_t u64(const std::string& what) {
        const std::uint64_t lo = u32(what);
        const std::uint64_t hi = u32(what);
        return lo | (hi << 32);
    }
    std::uint8_t u8(const std::string& what) {
        need(1, what);
        return static_cast<std::uint8_t>(buf[pos++]);
    }
    std::string bytes(std::size_t n, const std::string& what) {
        need(n, what);
        std::string out = buf.substr(pos, n);
        pos += n;
        return out;
    }
    float f32(const std::string& what) {
        const std::uint32_t bits = u32(what);
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
};

}  // namespace

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const ModelConfig& config) {
    std::string buf;
    buf.append(kMagic, 4);
    put_u32(buf, kVersion);
    put_u64(buf, fnv1a64(config.canonical()));
    put_u32(buf, static_cast<std::uint32_t>(params.tensors.size()));
    for (const auto& [name, tensor] : params.tensors) {  // std::map iterates sorted
        put_u16(buf, static_cast<std::uint16_t>(name.size()));
        buf.append(name);
        buf.push_back(static_cast<char>(tensor.rank()));
        for (std::size_t d : tensor.shape()) put_u32(buf, static_cast<std::uint32_t>(d));
        for (double v : tensor.data()) put_f32(buf, static_cast<float>(v));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("short write to '" + path.string() + "'");
}

ModelParams load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    Reader r{buf, 0, path.string()};
    const std::string magic = r.bytes(4, "magic");
    if (std::memcmp(magic.data(), kMagic, 4) != 0)
        throw IoError("'" + path.string() + "': bad magic '" + magic + "' (expected SCLR)");
    const std::uint32_t version = r.u32("version");
    if (version != kVersion)
        throw IoError("'" + path.string() + "': unsupported version " + std::to_string(version) +
                      " (expected " + std::to_string(kVersion) + ")");
    const std::uint64_t digest = r.u64("config digest");
    const std::uint64_t want = fnv1a64(expected.canonical());
    if (digest != want)
        throw IoError("'" + path.string() +
                      "': model-config digest mismatch (checkpoint was written for a "
                      "different architecture)");

    const std::uint32_t count = r.u32("tensor count");
    ModelParams params;
    for (std::uint32_t t = 0; t < count; ++t) {
        const std::uint16_t name_len = r.u16("tensor name length");
        const std::string name = r.bytes(name_len, "tensor name");
        const std::uint8_t rank = r.u8("rank of '" + name + "'");
        Shape shape(rank);
        std::size_t elems = 1;
        for (std::uint8_t d = 0; d < rank; ++d) {
            shape[d] = r.u32("dims of '" + name + "'");
            elems *= shape[d];
        }
        std::vector<double> data(elems);
        for (std::size_t i = 0; i < elems; ++i)
            data[i] = static_cast<double>(r.f32("payload of '" + name + "'"));
        params.set(name, Tensor(std::move(shape), std::move(data)));
    }
    if (r.pos != buf.size())
        throw IoError("'" + path.string() + "': " + std::to_string(buf.size() - r.pos) +
                      " trailing bytes after the last tensor");
    return params;
}

}  // namespace sclr
