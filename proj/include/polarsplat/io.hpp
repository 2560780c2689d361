#pragma once

// File formats: the planar float container, the split-sum LUT table, scene
// bundles (scene.json plus referenced files), checkpoints and sRGB previews.
//
// Float container layout, all integers little-endian:
//   "PSFI"  uint32 version  uint32 width  uint32 height  uint32 planes
//   uint16 length + bytes   component tag
//   planes x (uint16 length + bytes)   plane labels
//   planes x height x width float32, planar, row-major

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <json.hpp>

#include "polarsplat/envlight.hpp"
#include "polarsplat/errors.hpp"
#include "polarsplat/losses.hpp"
#include "polarsplat/params.hpp"
#include "polarsplat/polardr.hpp"

namespace polarsplat {

namespace fs = std::filesystem;
using Json = nlohmann::json;

inline constexpr std::uint32_t kFloatImageVersion = 1;
inline constexpr std::uint32_t kMaxPlanes = 4096;
inline constexpr int kBundleVersion = 1;

namespace tags {
inline constexpr const char* kStokesTotal = "stokes-total";
inline constexpr const char* kStokesDiffuse = "stokes-diffuse";
inline constexpr const char* kStokesSpecular = "stokes-specular";
inline constexpr const char* kCapture = "lp-capture";
inline constexpr const char* kMask = "mask";
inline constexpr const char* kNormal = "normal";
inline constexpr const char* kEnvLatent = "env-latent";
inline constexpr const char* kEnvRadiance = "env-radiance";
}  // namespace tags

/// Planar float32 image with labelled planes.
struct FloatImage {
    int width = 0;
    int height = 0;
    std::string component;
    std::vector<std::string> labels;
    std::vector<float> data;

    FloatImage() = default;
    FloatImage(int w, int h, std::string tag, std::vector<std::string> planeLabels)
        : width(w), height(h), component(std::move(tag)), labels(std::move(planeLabels)),
          data(static_cast<std::size_t>(w) * h * labels.size(), 0.0f) {}

    std::size_t planes() const { return labels.size(); }
    std::size_t planeSize() const { return static_cast<std::size_t>(width) * height; }
    float& at(std::size_t plane, std::size_t i) { return data[plane * planeSize() + i]; }
    float at(std::size_t plane, std::size_t i) const { return data[plane * planeSize() + i]; }

    std::size_t planeIndex(const std::string& label) const {
        const auto it = std::find(labels.begin(), labels.end(), label);
        if (it == labels.end()) throw IoError("float image has no plane " + label);
        return static_cast<std::size_t>(it - labels.begin());
    }
};

namespace detail {

inline void putU32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline void putString(std::string& out, const std::string& s) {
    if (s.size() > 0xFFFFu) throw IoError("label too long");
    out.push_back(static_cast<char>(s.size() & 0xFFu));
    out.push_back(static_cast<char>((s.size() >> 8) & 0xFFu));
    out += s;
}

struct Reader {
    const std::string& bytes;
    std::size_t pos = 0;
    std::string what;

    void need(std::size_t n) const {
        if (bytes.size() - pos < n) throw IoError(what + ": truncated file");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::string str() {
        need(2);
        const std::size_t n = static_cast<unsigned char>(bytes[pos]) | (static_cast<std::size_t>(static_cast<unsigned char>(bytes[pos + 1])) << 8);
        pos += 2;
        need(n);
        std::string s = bytes.substr(pos, n);
        pos += n;
        return s;
    }
};

inline std::string readBytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void writeBytes(const fs::path& path, const std::string& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace detail

inline std::string encodeFloatImage(const FloatImage& img) {
    if (img.width <= 0 || img.height <= 0 || img.planes() == 0 || img.planes() > kMaxPlanes)
        throw IoError("float image has no pixels or too many planes");
    if (img.data.size() != img.planeSize() * img.planes()) throw IoError("float image payload size mismatch");
    std::string out = "PSFI";
    detail::putU32(out, kFloatImageVersion);
    detail::putU32(out, static_cast<std::uint32_t>(img.width));
    detail::putU32(out, static_cast<std::uint32_t>(img.height));
    detail::putU32(out, static_cast<std::uint32_t>(img.planes()));
    detail::putString(out, img.component);
    for (const auto& l : img.labels) detail::putString(out, l);
    out.reserve(out.size() + img.data.size() * 4);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        if (!std::isfinite(img.data[i]))
            throw NumericError("non-finite value in plane " + img.labels[i / img.planeSize()] + " of " + img.component);
        detail::putU32(out, std::bit_cast<std::uint32_t>(img.data[i]));
    }
    return out;
}

inline FloatImage decodeFloatImage(const std::string& bytes, const std::string& what = "float image") {
    detail::Reader r{bytes, 0, what};
    r.need(4);
    if (bytes.compare(0, 4, "PSFI") != 0) throw IoError(what + ": bad magic");
    r.pos = 4;
    if (r.u32() != kFloatImageVersion) throw IoError(what + ": unsupported version");
    FloatImage img;
    const std::uint32_t w = r.u32(), h = r.u32(), planes = r.u32();
    if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16) || planes == 0 || planes > kMaxPlanes)
        throw IoError(what + ": bad dimensions");
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.component = r.str();
    for (std::uint32_t p = 0; p < planes; ++p) img.labels.push_back(r.str());
    const std::size_t count = img.planeSize() * planes;
    if (bytes.size() - r.pos != count * 4) throw IoError(what + ": payload length does not match header");
    img.data.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        img.data[i] = std::bit_cast<float>(r.u32());
        if (!std::isfinite(img.data[i])) throw IoError(what + ": non-finite value");
    }
    return img;
}

inline void writeFloatImage(const fs::path& path, const FloatImage& img) { detail::writeBytes(path, encodeFloatImage(img)); }

inline FloatImage readFloatImage(const fs::path& path) { return decodeFloatImage(detail::readBytes(path), path.string()); }

// Conversions between pipeline images and float containers.

inline const char* stokesTag(StokesComponent c) {
    switch (c) {
        case StokesComponent::Total: return tags::kStokesTotal;
        case StokesComponent::Diffuse: return tags::kStokesDiffuse;
        case StokesComponent::Specular: return tags::kStokesSpecular;
    }
    return tags::kStokesTotal;
}

inline std::vector<std::string> stokesLabels() {
    return {"s0.r", "s0.g", "s0.b", "s1.r", "s1.g", "s1.b", "s2.r", "s2.g", "s2.b"};
}

inline FloatImage toFloatImage(const StokesImage& img) {
    FloatImage f(img.width, img.height, stokesTag(img.component), stokesLabels());
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        const SpectralStokes& s = img.pixels[i];
        for (std::size_t c = 0; c < 3; ++c) {
            f.at(c, i) = static_cast<float>(s.s0[c]);
            f.at(3 + c, i) = static_cast<float>(s.s1[c]);
            f.at(6 + c, i) = static_cast<float>(s.s2[c]);
        }
    }
    return f;
}

inline FloatImage toFloatImage(const Image<Rgb>& s0, const Image<Rgb>& s1, const Image<Rgb>& s2,
                               const std::string& tag = tags::kStokesTotal) {
    requireSameShape(s0, s1, "stokes planes");
    requireSameShape(s0, s2, "stokes planes");
    FloatImage f(s0.width, s0.height, tag, stokesLabels());
    for (std::size_t i = 0; i < s0.size(); ++i)
        for (std::size_t c = 0; c < 3; ++c) {
            f.at(c, i) = static_cast<float>(s0.pixels[i][c]);
            f.at(3 + c, i) = static_cast<float>(s1.pixels[i][c]);
            f.at(6 + c, i) = static_cast<float>(s2.pixels[i][c]);
        }
    return f;
}

/// RGB image from three consecutive planes starting at `first`.
inline Image<Rgb> rgbPlanes(const FloatImage& f, std::size_t first) {
    if (first + 3 > f.planes()) throw IoError("float image lacks RGB planes");
    Image<Rgb> out(f.width, f.height);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.pixels[i] = {f.at(first, i), f.at(first + 1, i), f.at(first + 2, i)};
    return out;
}

inline FloatImage rgbToFloatImage(const Image<Rgb>& img, const std::string& tag) {
    FloatImage f(img.width, img.height, tag, {"r", "g", "b"});
    for (std::size_t i = 0; i < img.size(); ++i)
        for (std::size_t c = 0; c < 3; ++c) f.at(c, i) = static_cast<float>(img.pixels[i][c]);
    return f;
}

inline FloatImage scalarToFloatImage(const Image<double>& img, const std::string& tag) {
    FloatImage f(img.width, img.height, tag, {"value"});
    for (std::size_t i = 0; i < img.size(); ++i) f.at(0, i) = static_cast<float>(img.pixels[i]);
    return f;
}

inline Image<double> scalarPlane(const FloatImage& f, std::size_t plane = 0) {
    if (plane >= f.planes()) throw IoError("float image lacks plane");
    Image<double> out(f.width, f.height);
    for (std::size_t i = 0; i < out.size(); ++i) out.pixels[i] = f.at(plane, i);
    return out;
}

inline FloatImage normalToFloatImage(const Image<Vec3d>& img) {
    FloatImage f(img.width, img.height, tags::kNormal, {"nx", "ny", "nz"});
    for (std::size_t i = 0; i < img.size(); ++i)
        for (std::size_t c = 0; c < 3; ++c) f.at(c, i) = static_cast<float>(img.pixels[i][c]);
    return f;
}

inline Image<Vec3d> normalPlanes(const FloatImage& f) {
    if (f.planes() < 3) throw IoError("normal image needs three planes");
    Image<Vec3d> out(f.width, f.height);
    for (std::size_t i = 0; i < out.size(); ++i) out.pixels[i] = {f.at(0, i), f.at(1, i), f.at(2, i)};
    return out;
}

/// Environment latents as a face-major strip: width D, height 6 D.
inline FloatImage envToFloatImage(const std::vector<Rgb>& latents, int resolution) {
    if (latents.size() != static_cast<std::size_t>(6 * resolution * resolution))
        throw std::invalid_argument("environment latent count does not match resolution");
    FloatImage f(resolution, 6 * resolution, tags::kEnvLatent, {"r", "g", "b"});
    for (std::size_t t = 0; t < latents.size(); ++t)
        for (std::size_t c = 0; c < 3; ++c) f.at(c, t) = static_cast<float>(latents[t][c]);
    return f;
}

/// Latents from an environment strip holding latents or linear radiance.
inline std::vector<Rgb> envFromFloatImage(const FloatImage& f, int* resolution = nullptr) {
    if (f.height != 6 * f.width || f.planes() != 3) throw IoError("environment must be a D x 6D strip with 3 planes");
    const bool radiance = f.component == tags::kEnvRadiance;
    if (!radiance && f.component != tags::kEnvLatent) throw IoError("not an environment file: " + f.component);
    std::vector<Rgb> latents(f.planeSize());
    for (std::size_t t = 0; t < latents.size(); ++t)
        for (std::size_t c = 0; c < 3; ++c) {
            const double v = f.at(c, t);
            if (radiance && v < 0.0) throw IoError("negative environment radiance");
            latents[t][c] = radiance ? envActivationInverse(v) : v;
        }
    if (resolution) *resolution = f.width;
    return latents;
}

/// Rounds latents to the float32 values the container stores.
inline std::vector<Rgb> quantizeLatents(std::vector<Rgb> latents) {
    for (Rgb& l : latents)
        for (std::size_t c = 0; c < 3; ++c) l[c] = static_cast<float>(l[c]);
    return latents;
}

// Split-sum table: "PSLT", uint32 version, uint32 cos nodes, uint32 roughness
// nodes, float64 cos range, float64 roughness range, float64 tau0 then tau1.

inline std::string encodeLUT(const SplitSumLUT& lut) {
    if (lut.empty()) throw IoError("LUT is empty");
    std::string out = "PSLT";
    detail::putU32(out, 1);
    detail::putU32(out, static_cast<std::uint32_t>(lut.cosCount));
    detail::putU32(out, static_cast<std::uint32_t>(lut.roughCount));
    auto putF64 = [&out](double v) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        detail::putU32(out, static_cast<std::uint32_t>(bits & 0xFFFFFFFFu));
        detail::putU32(out, static_cast<std::uint32_t>(bits >> 32));
    };
    for (double v : {lut.cosMin, lut.cosMax, lut.roughMin, lut.roughMax}) putF64(v);
    for (double v : lut.tau0) putF64(v);
    for (double v : lut.tau1) putF64(v);
    return out;
}

inline SplitSumLUT decodeLUT(const std::string& bytes, const std::string& what = "LUT") {
    detail::Reader r{bytes, 0, what};
    r.need(4);
    if (bytes.compare(0, 4, "PSLT") != 0) throw IoError(what + ": bad magic");
    r.pos = 4;
    if (r.u32() != 1) throw IoError(what + ": unsupported version");
    SplitSumLUT lut;
    const std::uint32_t nc = r.u32(), nr = r.u32();
    if (nc < 2 || nr < 2 || nc > 4096 || nr > 4096) throw IoError(what + ": bad dimensions");
    lut.cosCount = static_cast<int>(nc);
    lut.roughCount = static_cast<int>(nr);
    auto getF64 = [&r]() {
        const std::uint64_t lo = r.u32(), hi = r.u32();
        return std::bit_cast<double>(lo | (hi << 32));
    };
    lut.cosMin = getF64();
    lut.cosMax = getF64();
    lut.roughMin = getF64();
    lut.roughMax = getF64();
    const std::size_t n = static_cast<std::size_t>(nc) * nr;
    if (bytes.size() - r.pos != 2 * n * 8) throw IoError(what + ": payload length does not match header");
    lut.tau0.resize(n);
    lut.tau1.resize(n);
    for (double& v : lut.tau0) v = getF64();
    for (double& v : lut.tau1) v = getF64();
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(lut.tau0[i]) || !std::isfinite(lut.tau1[i])) throw IoError(what + ": non-finite value");
    return lut;
}

inline void writeLUT(const fs::path& path, const SplitSumLUT& lut) { detail::writeBytes(path, encodeLUT(lut)); }
inline SplitSumLUT readLUT(const fs::path& path) { return decodeLUT(detail::readBytes(path), path.string()); }

// sRGB previews.

inline double linearToSrgb(double v) {
    v = std::clamp(v, 0.0, 1.0);
    return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

/// Binary PPM of a linear image, scaled by `exposure` then sRGB-encoded.
inline void writePreview(const fs::path& path, const Image<Rgb>& img, double exposure = 1.0) {
    std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    for (const Rgb& p : img.pixels)
        for (std::size_t c = 0; c < 3; ++c) {
            const double v = p[c] * exposure;
            out.push_back(static_cast<char>(std::lround(255.0 * linearToSrgb(std::isfinite(v) ? v : 0.0))));
        }
    detail::writeBytes(path, out);
}

// JSON helpers.

inline Json toJson(const Vec3d& v) { return Json::array({v.x, v.y, v.z}); }

inline Vec3d vec3FromJson(const Json& j) {
    if (!j.is_array() || j.size() != 3) throw IoError("expected a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline Json toJson(const SurfelGaussian& g) {
    return {{"position", toJson(g.position)}, {"tangentU", toJson(g.tangentU)}, {"tangentV", toJson(g.tangentV)},
            {"scale", {g.scaleU, g.scaleV}},   {"opacity", g.opacity},          {"albedo", toJson(g.albedo)},
            {"roughness", g.roughness},        {"iorLatent", g.iorLatent}};
}

inline SurfelGaussian surfelFromJson(const Json& j) {
    SurfelGaussian g;
    g.position = vec3FromJson(j.at("position"));
    g.tangentU = vec3FromJson(j.at("tangentU"));
    g.tangentV = vec3FromJson(j.at("tangentV"));
    g.scaleU = j.at("scale").at(0).get<double>();
    g.scaleV = j.at("scale").at(1).get<double>();
    g.opacity = j.at("opacity").get<double>();
    g.albedo = vec3FromJson(j.at("albedo"));
    g.roughness = j.at("roughness").get<double>();
    g.iorLatent = j.at("iorLatent").get<double>();
    return g;
}

inline Json toJson(const Camera& c) {
    Json r = Json::array();
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) r.push_back(c.rotation(i, k));
    return {{"width", c.width}, {"height", c.height}, {"fx", c.fx},   {"fy", c.fy},
            {"cx", c.cx},       {"cy", c.cy},         {"rotation", r}, {"translation", toJson(c.translation)}};
}

inline Camera cameraFromJson(const Json& j) {
    Camera c;
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    c.fx = j.at("fx").get<double>();
    c.fy = j.at("fy").get<double>();
    c.cx = j.at("cx").get<double>();
    c.cy = j.at("cy").get<double>();
    const Json& r = j.at("rotation");
    if (!r.is_array() || r.size() != 9) throw IoError("camera rotation needs 9 entries");
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) c.rotation(i, k) = r[static_cast<std::size_t>(3 * i + k)].get<double>();
    c.translation = vec3FromJson(j.at("translation"));
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw IoError(e.what());
    }
    return c;
}

inline std::string dumpJson(const Json& j) { return j.dump(2) + "\n"; }

inline Json readJson(const fs::path& path) {
    try {
        return Json::parse(detail::readBytes(path));
    } catch (const Json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

// Scene bundles.

inline const char* modeName(PolarizationMode m) { return m == PolarizationMode::FullStokes ? "fullStokes" : "partialLP"; }

inline PolarizationMode parseModeName(const std::string& s) {
    if (s == "fullStokes") return PolarizationMode::FullStokes;
    if (s == "partialLP") return PolarizationMode::PartialLP;
    throw IoError("unknown polarization mode " + s);
}

/// Files belonging to one view, relative to the bundle directory.
struct ViewFiles {
    std::string stokes;  // full-Stokes mode
    std::vector<std::pair<int, std::string>> captures;  // (LP index, file) in partial mode
    std::string mask;
    bool heldOut = false;
};

struct SceneBundle {
    std::vector<SurfelGaussian> surfels;
    int envResolution = 0;
    std::vector<Rgb> envLatents;
    std::vector<Camera> cameras;
    std::vector<ViewFiles> views;
    std::vector<double> lpAngles;
    PolarizationMode mode = PolarizationMode::FullStokes;
    std::string units = "scene units";
    Json metadata = Json::object();

    static constexpr const char* kSceneFile = "scene.json";
    static constexpr const char* kEnvFile = "env.psfi";

    /// Axis-aligned bounds of the surfel centres.
    std::pair<Vec3d, Vec3d> bounds() const {
        if (surfels.empty()) return {};
        Vec3d lo = surfels.front().position, hi = lo;
        for (const auto& g : surfels)
            for (std::size_t c = 0; c < 3; ++c) {
                lo[c] = std::min(lo[c], g.position[c]);
                hi[c] = std::max(hi[c], g.position[c]);
            }
        return {lo, hi};
    }

    Json toJson() const {
        Json j;
        j["format"] = "polarsplat-scene";
        j["version"] = kBundleVersion;
        j["units"] = units;
        const auto [lo, hi] = bounds();
        j["bbox"] = {{"min", polarsplat::toJson(lo)}, {"max", polarsplat::toJson(hi)}};
        j["polarizationMode"] = modeName(mode);
        j["lpAngles"] = lpAngles;
        j["environment"] = {{"resolution", envResolution}, {"file", kEnvFile}};
        j["surfels"] = Json::array();
        for (const auto& g : surfels) j["surfels"].push_back(polarsplat::toJson(g));
        j["views"] = Json::array();
        for (std::size_t v = 0; v < cameras.size(); ++v) {
            Json view = {{"camera", polarsplat::toJson(cameras[v])}, {"heldOut", views[v].heldOut}};
            if (!views[v].stokes.empty()) view["stokes"] = views[v].stokes;
            if (!views[v].mask.empty()) view["mask"] = views[v].mask;
            if (!views[v].captures.empty()) {
                view["captures"] = Json::array();
                for (const auto& [lp, file] : views[v].captures) view["captures"].push_back({{"lp", lp}, {"file", file}});
            }
            j["views"].push_back(view);
        }
        j["metadata"] = metadata;
        return j;
    }

    /// Writes scene.json and the environment; observation files are written
    /// separately by whoever produced them.
    void save(const fs::path& dir) const {
        if (cameras.size() != views.size()) throw std::invalid_argument("camera count must match view count");
        fs::create_directories(dir);
        writeFloatImage(dir / kEnvFile, envToFloatImage(envLatents, envResolution));
        detail::writeBytes(dir / kSceneFile, dumpJson(toJson()));
    }

    /// Loads scene.json and the environment and checks that every referenced
    /// file exists.
    static SceneBundle load(const fs::path& dir) {
        const Json j = readJson(dir / kSceneFile);
        SceneBundle b;
        try {
            if (j.at("format").get<std::string>() != "polarsplat-scene") throw IoError("not a scene bundle");
            if (j.at("version").get<int>() != kBundleVersion) throw IoError("unsupported bundle version");
            b.units = j.value("units", b.units);
            b.mode = parseModeName(j.at("polarizationMode").get<std::string>());
            b.lpAngles = j.at("lpAngles").get<std::vector<double>>();
            for (const auto& s : j.at("surfels")) b.surfels.push_back(surfelFromJson(s));
            const Json& env = j.at("environment");
            b.envLatents = envFromFloatImage(readFloatImage(dir / env.at("file").get<std::string>()), &b.envResolution);
            if (b.envResolution != env.at("resolution").get<int>()) throw IoError("environment resolution mismatch");
            for (const auto& v : j.at("views")) {
                b.cameras.push_back(cameraFromJson(v.at("camera")));
                ViewFiles f;
                f.heldOut = v.value("heldOut", false);
                f.stokes = v.value("stokes", std::string());
                f.mask = v.value("mask", std::string());
                if (v.contains("captures"))
                    for (const auto& c : v.at("captures"))
                        f.captures.emplace_back(c.at("lp").get<int>(), c.at("file").get<std::string>());
                b.views.push_back(std::move(f));
            }
            b.metadata = j.value("metadata", Json::object());
        } catch (const Json::exception& e) {
            throw IoError((dir / kSceneFile).string() + ": " + e.what());
        }
        for (const auto& v : b.views) {
            std::vector<std::string> files;
            if (!v.stokes.empty()) files.push_back(v.stokes);
            if (!v.mask.empty()) files.push_back(v.mask);
            for (const auto& c : v.captures) {
                if (c.first < 0 || static_cast<std::size_t>(c.first) >= b.lpAngles.size())
                    throw IoError("capture names an unknown polarizer");
                files.push_back(c.second);
            }
            for (const auto& f : files)
                if (!fs::exists(dir / f)) throw IoError("bundle references missing file " + f);
        }
        return b;
    }

    SceneParameters parameters() const { return SceneParameters::fromScene(surfels, envLatents, lpAngles); }
};

/// Reads the observations of the views selected by `keep`.
inline std::vector<Observation> loadObservations(const SceneBundle& b, const fs::path& dir,
                                                 const std::vector<std::size_t>& keep) {
    std::vector<Observation> out;
    for (std::size_t v : keep) {
        const ViewFiles& f = b.views.at(v);
        Observation o;
        o.camera = b.cameras[v];
        auto checkSize = [&](const FloatImage& img) {
            if (img.width != o.camera.width || img.height != o.camera.height)
                throw IoError("observation size does not match camera " + std::to_string(v));
        };
        if (!f.stokes.empty()) {
            const FloatImage s = readFloatImage(dir / f.stokes);
            checkSize(s);
            if (s.planes() != 9) throw IoError(f.stokes + ": expected 9 Stokes planes");
            o.s0 = rgbPlanes(s, 0);
            o.s1 = rgbPlanes(s, 3);
            o.s2 = rgbPlanes(s, 6);
        }
        for (const auto& [lp, file] : f.captures) {
            const FloatImage c = readFloatImage(dir / file);
            checkSize(c);
            o.captures.push_back({lp, rgbPlanes(c, 0)});
        }
        if (!f.mask.empty()) {
            const FloatImage m = readFloatImage(dir / f.mask);
            checkSize(m);
            o.mask = scalarPlane(m);
            for (double x : o.mask.pixels)
                if (x < 0.0 || x > 1.0) throw IoError(f.mask + ": mask values must lie in [0,1]");
        }
        out.push_back(std::move(o));
    }
    return out;
}

// Checkpoints: the full parameter state plus the iteration counter.

inline Json checkpointJson(const SceneParameters& p, int envResolution, long iteration) {
    Json j;
    j["format"] = "polarsplat-checkpoint";
    j["version"] = 1;
    j["iteration"] = iteration;
    j["envResolution"] = envResolution;
    j["frames"] = Json::array();
    for (const auto& f : p.frames) j["frames"].push_back({{"tangentU", toJson(f.tangentU)}, {"tangentV", toJson(f.tangentV)}});
    j["surfels"] = Json::array();
    for (const auto& v : p.surfels) j["surfels"].push_back(std::vector<double>(v.begin(), v.end()));
    j["envLatents"] = Json::array();
    for (const Rgb& l : p.envLatents) j["envLatents"].push_back(toJson(l));
    j["lpAngles"] = p.lpAngles;
    return j;
}

struct Checkpoint {
    SceneParameters params;
    int envResolution = 0;
    long iteration = 0;
};

inline void writeCheckpoint(const fs::path& path, const SceneParameters& p, int envResolution, long iteration) {
    detail::writeBytes(path, dumpJson(checkpointJson(p, envResolution, iteration)));
}

inline Checkpoint readCheckpoint(const fs::path& path) {
    const Json j = readJson(path);
    Checkpoint c;
    try {
        if (j.at("format").get<std::string>() != "polarsplat-checkpoint") throw IoError("not a checkpoint");
        c.iteration = j.at("iteration").get<long>();
        c.envResolution = j.at("envResolution").get<int>();
        const Json& frames = j.at("frames");
        const Json& surfels = j.at("surfels");
        if (frames.size() != surfels.size()) throw IoError("checkpoint frame count mismatch");
        for (std::size_t i = 0; i < frames.size(); ++i) {
            SurfelGaussian f;
            f.tangentU = vec3FromJson(frames[i].at("tangentU"));
            f.tangentV = vec3FromJson(frames[i].at("tangentV"));
            const auto v = surfels[i].get<std::vector<double>>();
            if (v.size() != kSurfelParams) throw IoError("checkpoint surfel has wrong parameter count");
            SurfelVector sv{};
            std::copy(v.begin(), v.end(), sv.begin());
            c.params.frames.push_back(f);
            c.params.surfels.push_back(sv);
        }
        for (const auto& l : j.at("envLatents")) c.params.envLatents.push_back(vec3FromJson(l));
        c.params.lpAngles = j.at("lpAngles").get<std::vector<double>>();
    } catch (const Json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    if (c.params.envLatents.size() != static_cast<std::size_t>(6 * c.envResolution * c.envResolution))
        throw IoError(path.string() + ": environment size mismatch");
    return c;
}

}  // namespace polarsplat
