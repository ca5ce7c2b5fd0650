#include "chestnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "chestnet/config.hpp"

namespace chestnet {

using nlohmann::json;

namespace {

constexpr std::string_view kMagic = "CHESTNET-CKPT\n";

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t pos) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    return v;
}

void put_f32(std::string& out, float f) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

float get_f32(const char* p) {
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return std::bit_cast<float>(bits);
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
    json manifest = json::array();
    std::uint64_t offset = 0;
    for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
        const auto& v = ckpt.params.value(i);
        manifest.push_back({{"name", ckpt.params.name(i)},
                            {"branch", std::string(branch_name(ckpt.params.branch(i)))},
                            {"shape", v.shape().dims()},
                            {"offset", offset}});
        offset += v.numel() * sizeof(float);
    }
    const json header{{"format_version", kCheckpointFormatVersion},
                      {"config", to_json(ckpt.config)},
                      {"params", manifest},
                      {"body_bytes", offset},
                      {"meta", ckpt.meta}};
    const std::string h = header.dump();
    std::string out(kMagic);
    put_u64(out, h.size());
    out += h;
    out.reserve(out.size() + offset);
    for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
        for (float f : ckpt.params.value(i).storage()) put_f32(out, f);
    }
    return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
    if (bytes.size() < kMagic.size() + 8 || bytes.compare(0, kMagic.size(), kMagic) != 0) {
        throw CheckpointError("not a checkpoint file (bad magic)");
    }
    const std::uint64_t hlen = get_u64(bytes, kMagic.size());
    const std::size_t hstart = kMagic.size() + 8;
    if (hlen > bytes.size() - hstart) throw CheckpointError("truncated checkpoint header");
    json header;
    try {
        header = json::parse(bytes.substr(hstart, hlen));
    } catch (const json::parse_error& e) {
        throw CheckpointError(std::string("corrupt checkpoint header: ") + e.what());
    }
    const int version = header.value("format_version", -1);
    if (version != kCheckpointFormatVersion) {
        throw CheckpointError("unsupported checkpoint format version " + std::to_string(version) + " (expected " +
                              std::to_string(kCheckpointFormatVersion) + ")");
    }
    Checkpoint ckpt;
    try {
        ckpt.config = model_from_json(header.at("config"));
        ckpt.meta = header.at("meta");
        const std::size_t body = hstart + hlen;
        const auto body_bytes = header.at("body_bytes").get<std::uint64_t>();
        if (bytes.size() - body != body_bytes) {
            throw CheckpointError("checkpoint body is " + std::to_string(bytes.size() - body) + " bytes, header says " +
                                  std::to_string(body_bytes));
        }
        std::uint64_t expected = 0;
        for (const auto& p : header.at("params")) {
            Shape shape(p.at("shape").get<std::vector<std::size_t>>());
            const auto off = p.at("offset").get<std::uint64_t>();
            if (off != expected) throw CheckpointError("non-contiguous offset for " + p.at("name").get<std::string>());
            const std::uint64_t len = shape.numel() * sizeof(float);
            if (off + len > body_bytes) throw CheckpointError("parameter extends past the body");
            std::vector<float> data(shape.numel());
            for (std::size_t i = 0; i < data.size(); ++i) data[i] = get_f32(bytes.data() + body + off + 4 * i);
            const auto branch = p.at("branch").get<std::string>() == "attention" ? Branch::attention
                                                                                 : Branch::classification;
            ckpt.params.add(p.at("name").get<std::string>(), branch, Tensor<float>(std::move(shape), std::move(data)));
            expected = off + len;
        }
        if (expected != body_bytes) throw CheckpointError("manifest does not cover the body");
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
    } catch (const ConfigError& e) {
        throw CheckpointError(std::string("checkpoint config: ") + e.what());
    }
    return ckpt;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CheckpointError("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) throw CheckpointError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw CheckpointError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_checkpoint(ss.str());
}

}  // namespace chestnet
