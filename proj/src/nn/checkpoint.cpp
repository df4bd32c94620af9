#include "rampinn/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rampinn/error.hpp"

namespace rampinn::nn {

namespace {
constexpr const char* kMagic = "RAMPINN-CKPT 1 ";
static_assert(std::endian::native == std::endian::little, "checkpoint payload assumes a little-endian host");
}  // namespace

const NamedArray* Checkpoint::find(const std::string& name) const {
    for (const auto& a : arrays) {
        if (a.name == name) return &a;
    }
    return nullptr;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    nlohmann::json manifest;
    manifest["config"] = ckpt.config;
    auto& list = manifest["arrays"] = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& a : ckpt.arrays) {
        if (a.values.size() != a.shape.numel()) {
            throw Error(ErrorKind::ShapeMismatch, "checkpoint array " + a.name + " does not match its shape");
        }
        list.push_back({{"name", a.name},
                        {"shape", {a.shape.batch, a.shape.channels, a.shape.length}},
                        {"offset", offset},
                        {"count", a.values.size()}});
        offset += a.values.size();
    }
    const std::string text = manifest.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write checkpoint " + path.string());
    out << kMagic << text.size() << '\n' << text;
    for (const auto& a : ckpt.arrays) {
        out.write(reinterpret_cast<const char*>(a.values.data()),
                  static_cast<std::streamsize>(a.values.size() * sizeof(float)));
    }
    if (!out) throw Error(ErrorKind::Io, "failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open checkpoint " + path.string());
    std::string line;
    std::getline(in, line);
    const std::string magic = kMagic;
    if (line.rfind(magic, 0) != 0) throw Error(ErrorKind::Parse, path.string() + " is not a checkpoint file");
    std::size_t size = 0;
    try {
        size = std::stoull(line.substr(magic.size()));
    } catch (const std::exception&) {
        throw Error(ErrorKind::Parse, "bad checkpoint header in " + path.string());
    }
    std::string text(size, '\0');
    in.read(text.data(), static_cast<std::streamsize>(size));
    if (!in) throw Error(ErrorKind::Parse, "truncated checkpoint manifest in " + path.string());

    Checkpoint ckpt;
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(text);
        ckpt.config = manifest.at("config");
        for (const auto& entry : manifest.at("arrays")) {
            NamedArray a;
            a.name = entry.at("name").get<std::string>();
            const auto& s = entry.at("shape");
            a.shape = Shape{s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>(), s.at(2).get<std::size_t>()};
            a.values.resize(entry.at("count").get<std::size_t>());
            if (a.values.size() != a.shape.numel()) {
                throw Error(ErrorKind::Parse, "checkpoint array " + a.name + " count does not match shape");
            }
            ckpt.arrays.push_back(std::move(a));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, "bad checkpoint manifest in " + path.string() + ": " + e.what());
    }
    for (auto& a : ckpt.arrays) {
        in.read(reinterpret_cast<char*>(a.values.data()), static_cast<std::streamsize>(a.values.size() * sizeof(float)));
        if (!in) throw Error(ErrorKind::Parse, "truncated checkpoint payload in " + path.string());
    }
    return ckpt;
}

}  // namespace rampinn::nn
