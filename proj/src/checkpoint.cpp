#include "winnet/checkpoint.hpp"

#include "winnet/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace winnet {

namespace {

std::filesystem::path with_ext(const std::filesystem::path& stem, const char* ext) {
    auto p = stem;
    p += ext;
    return p;
}

void put_f32_le(std::string& buf, float f) {
    auto u = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((u >> (8 * i)) & 0xFFu));
}

float get_f32_le(const unsigned char* p) {
    std::uint32_t u = 0;
    for (int i = 0; i < 4; ++i) u |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return std::bit_cast<float>(u);
}

} // namespace

nlohmann::json save_checkpoint(const std::filesystem::path& stem, const Forecaster& model,
                               const nlohmann::json& extra) {
    nlohmann::json manifest;
    manifest["format"] = kCheckpointFormat;
    manifest["model"] = model.kind();
    manifest["config"] = model.config_json();
    manifest["dtype"] = "float32";
    manifest["byte_order"] = "little";
    manifest["blob"] = with_ext(stem, ".bin").filename().string();
    manifest["extra"] = extra;

    std::string blob;
    blob.reserve(model.params().numel() * 4);
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : model.params().entries()) {
        entries.push_back({{"name", e.name},
                           {"shape", e.value.shape()},
                           {"offset", blob.size()},
                           {"count", e.value.numel()}});
        for (double v : e.value.data()) put_f32_le(blob, static_cast<float>(v));
    }
    manifest["params"] = entries;
    manifest["total_bytes"] = blob.size();

    if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
    std::ofstream bin(with_ext(stem, ".bin"), std::ios::binary);
    bin.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    std::ofstream js(with_ext(stem, ".json"));
    js << manifest.dump(2) << '\n';
    if (!bin || !js) throw Error("failed to write checkpoint at " + stem.string());
    return manifest;
}

Checkpoint load_checkpoint(const std::filesystem::path& stem) {
    std::ifstream js(with_ext(stem, ".json"));
    if (!js) throw Error("checkpoint manifest not found: " + with_ext(stem, ".json").string());
    nlohmann::json manifest;
    try {
        js >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad checkpoint manifest: ") + e.what());
    }
    if (manifest.value("format", "") != kCheckpointFormat) throw ParseError("unrecognised checkpoint format");

    std::ifstream bin(stem.parent_path() / manifest.at("blob").get<std::string>(), std::ios::binary);
    if (!bin) throw Error("checkpoint blob missing for " + stem.string());
    std::string blob((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());

    Checkpoint ck;
    ck.model_kind = manifest.at("model").get<std::string>();
    ck.config = manifest.at("config");
    ck.extra = manifest.value("extra", nlohmann::json::object());
    ck.model = make_forecaster(ck.model_kind, ck.config);

    const auto& entries = manifest.at("params");
    if (entries.size() != ck.model->params().size()) {
        throw DimensionError("checkpoint holds " + std::to_string(entries.size()) + " tensors, model expects " +
                             std::to_string(ck.model->params().size()));
    }
    for (const auto& entry : entries) {
        const auto name = entry.at("name").get<std::string>();
        Tensor t = ck.model->params().get(name);
        const auto shape = entry.at("shape").get<Shape>();
        if (shape != t.shape()) {
            throw DimensionError("checkpoint shape " + shape_str(shape) + " for '" + name + "' != model shape " +
                                 shape_str(t.shape()));
        }
        const auto offset = entry.at("offset").get<std::size_t>();
        if (offset + 4 * t.numel() > blob.size()) throw ParseError("checkpoint blob truncated at '" + name + "'");
        const auto* base = reinterpret_cast<const unsigned char*>(blob.data()) + offset;
        for (std::size_t i = 0; i < t.numel(); ++i) t[i] = static_cast<double>(get_f32_le(base + 4 * i));
    }
    return ck;
}

} // namespace winnet
