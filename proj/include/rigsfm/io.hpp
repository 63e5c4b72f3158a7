// Copyright 2026 The rigsfm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rigsfm/errors.hpp"
#include "rigsfm/mask.hpp"
#include "rigsfm/matches.hpp"
#include "rigsfm/rig.hpp"
#include "rigsfm/rng.hpp"
#include "rigsfm/se3.hpp"

namespace rigsfm {
namespace io {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& path, const std::string& data) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

inline std::uint64_t file_hash(const fs::path& path) { return fnv1a64(read_file(path)); }

// ---------------------------------------------------------------------------
// PGM (P5, maxval 255). Masks threshold at 128 on read.

namespace detail {

struct PgmData {
    int width = 0, height = 0;
    std::vector<std::uint8_t> pixels;
};

inline PgmData read_pgm_raw(const fs::path& path) {
    const std::string data = read_file(path);
    std::size_t pos = 0;
    auto token = [&]() -> std::string {
        while (pos < data.size()) {
            if (std::isspace(static_cast<unsigned char>(data[pos]))) {
                ++pos;
            } else if (data[pos] == '#') {
                while (pos < data.size() && data[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
        const std::size_t start = pos;
        while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
        if (start == pos)
            throw ValidationError(path.string() + ": truncated PGM header at offset " +
                                  std::to_string(start));
        return data.substr(start, pos - start);
    };

    if (token() != "P5") throw ValidationError(path.string() + ": not a P5 PGM");
    PgmData out;
    int maxval = 0;
    try {
        out.width = std::stoi(token());
        out.height = std::stoi(token());
        maxval = std::stoi(token());
    } catch (const std::exception&) {
        throw ValidationError(path.string() + ": malformed PGM header");
    }
    if (out.width <= 0 || out.height <= 0 || maxval <= 0 || maxval > 255)
        throw ValidationError(path.string() + ": unsupported PGM geometry/maxval");
    ++pos; // single whitespace after maxval
    const std::size_t need = static_cast<std::size_t>(out.width) * out.height;
    if (data.size() - pos < need)
        throw ValidationError(path.string() + ": PGM payload truncated at offset " +
                              std::to_string(data.size()));
    out.pixels.assign(data.begin() + static_cast<std::ptrdiff_t>(pos),
                      data.begin() + static_cast<std::ptrdiff_t>(pos + need));
    return out;
}

} // namespace detail

inline void write_pgm(const MaskRaster& mask, const fs::path& path) {
    std::string out = "P5\n" + std::to_string(mask.width()) + " " +
                      std::to_string(mask.height()) + "\n255\n";
    out.reserve(out.size() + static_cast<std::size_t>(mask.width()) * mask.height());
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            out.push_back(mask.get(x, y) ? static_cast<char>(255) : '\0');
    write_file(path, out);
}

inline MaskRaster read_pgm_mask(const fs::path& path) {
    const auto raw = detail::read_pgm_raw(path);
    MaskRaster mask(raw.width, raw.height);
    for (int y = 0; y < raw.height; ++y)
        for (int x = 0; x < raw.width; ++x)
            if (raw.pixels[static_cast<std::size_t>(y) * raw.width + x] >= 128) mask.set(x, y);
    return mask;
}

inline void write_pgm_gray(const std::vector<std::uint8_t>& pixels, int width, int height,
                           const fs::path& path) {
    if (pixels.size() != static_cast<std::size_t>(width) * height)
        throw ValidationError("write_pgm_gray: pixel count mismatch");
    std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
    write_file(path, out);
}

struct GrayImage {
    int width = 0, height = 0;
    std::vector<std::uint8_t> pixels;
};

inline GrayImage read_pgm_gray(const fs::path& path) {
    const auto raw = detail::read_pgm_raw(path);
    return {raw.width, raw.height, raw.pixels};
}

// ---------------------------------------------------------------------------
// JSON-lines match files

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string match_to_json_line(const MatchRecord& m) {
    json j;
    j["xA"] = {m.xa.x(), m.xa.y()};
    j["xB"] = {m.xb.x(), m.xb.y()};
    j["o"] = m.o;
    j["pab"] = m.pab;
    j["pba"] = m.pba;
    if (m.id >= 0) j["id"] = m.id;
    return j.dump();
}

inline MatchRecord match_from_json(const json& j) {
    MatchRecord m;
    m.xa = Vec2(j.at("xA").at(0).get<double>(), j.at("xA").at(1).get<double>());
    m.xb = Vec2(j.at("xB").at(0).get<double>(), j.at("xB").at(1).get<double>());
    m.o = j.at("o").get<double>();
    m.pab = j.at("pab").get<double>();
    m.pba = j.at("pba").get<double>();
    m.id = j.value("id", static_cast<std::int64_t>(-1));
    m.validate();
    return m;
}

inline void write_matches_jsonl(const RawMatchSet& matches, const fs::path& path) {
    std::string out;
    for (const auto& m : matches) {
        out += match_to_json_line(m);
        out += '\n';
    }
    write_file(path, out);
}

inline RawMatchSet read_matches_jsonl(const fs::path& path) {
    const std::string data = read_file(path);
    RawMatchSet out;
    std::istringstream in(data);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(match_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw ValidationError(path.string() + ": parse error at line " +
                                  std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

/// Verified pair file: one header line {E, n_inliers, dropped}, then per-match
/// lines carrying the score and inlier flag.
struct VerifiedPairFile {
    bool dropped = false;
    std::array<double, 9> e{}; // row-major, valid when !dropped
    int n_inliers = 0;
    std::vector<MatchRecord> matches;
    std::vector<double> scores;
    std::vector<char> inlier;
};

inline void write_verified_jsonl(const VerifiedPairFile& v, const fs::path& path) {
    json header;
    if (v.dropped) {
        header["dropped"] = true;
        header["E"] = nullptr;
    } else {
        header["dropped"] = false;
        header["E"] = v.e;
    }
    header["n_inliers"] = v.n_inliers;
    std::string out = header.dump();
    out += '\n';
    for (std::size_t i = 0; i < v.matches.size(); ++i) {
        json j = json::parse(match_to_json_line(v.matches[i]));
        j["s"] = v.scores[i];
        j["inlier"] = static_cast<bool>(v.inlier[i]);
        out += j.dump();
        out += '\n';
    }
    write_file(path, out);
}

inline VerifiedPairFile read_verified_jsonl(const fs::path& path) {
    const std::string data = read_file(path);
    std::istringstream in(data);
    std::string line;
    if (!std::getline(in, line))
        throw ValidationError(path.string() + ": missing verified-pair header");
    VerifiedPairFile v;
    try {
        const json header = json::parse(line);
        v.dropped = header.value("dropped", false);
        v.n_inliers = header.at("n_inliers").get<int>();
        if (!v.dropped) {
            const auto& e = header.at("E");
            for (int i = 0; i < 9; ++i) v.e[static_cast<std::size_t>(i)] = e.at(i).get<double>();
        }
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": parse error at line 1: " + e.what());
    }
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            v.matches.push_back(match_from_json(j));
            v.scores.push_back(j.at("s").get<double>());
            v.inlier.push_back(j.at("inlier").get<bool>() ? 1 : 0);
        } catch (const json::exception& e) {
            throw ValidationError(path.string() + ": parse error at line " +
                                  std::to_string(lineno) + ": " + e.what());
        }
    }
    return v;
}

// ---------------------------------------------------------------------------
// Rig configuration JSON

inline json pose_to_json(const RigidPose& p) {
    json j;
    j["R"] = {p.rotation(0, 0), p.rotation(0, 1), p.rotation(0, 2),
              p.rotation(1, 0), p.rotation(1, 1), p.rotation(1, 2),
              p.rotation(2, 0), p.rotation(2, 1), p.rotation(2, 2)};
    j["t"] = {p.translation.x(), p.translation.y(), p.translation.z()};
    return j;
}

inline RigidPose pose_from_json(const json& j, const char* rkey = "R", const char* tkey = "t") {
    Mat3 r;
    const auto& rj = j.at(rkey);
    for (int i = 0; i < 9; ++i) r(i / 3, i % 3) = rj.at(i).get<double>();
    const auto& tj = j.at(tkey);
    return RigidPose(r, Vec3(tj.at(0).get<double>(), tj.at(1).get<double>(), tj.at(2).get<double>()));
}

inline json rig_to_json(const RigConfig& rig) {
    json j;
    j["cameras"] = json::array();
    for (const auto& cam : rig.cameras) {
        json c;
        c["id"] = cam.id;
        c["fx"] = cam.intrinsics.fx;
        c["fy"] = cam.intrinsics.fy;
        c["cx"] = cam.intrinsics.cx;
        c["cy"] = cam.intrinsics.cy;
        c["k"] = cam.intrinsics.k;
        c["width"] = cam.intrinsics.width;
        c["height"] = cam.intrinsics.height;
        c["prior"] = pose_to_json(cam.prior);
        j["cameras"].push_back(std::move(c));
    }
    j["adjacency"] = rig.adjacency;
    j["reference"] = rig.reference_camera;
    return j;
}

inline RigConfig rig_from_json(const json& j) {
    RigConfig rig;
    for (const auto& c : j.at("cameras")) {
        RigCamera cam;
        cam.id = c.at("id").get<std::string>();
        cam.intrinsics = FisheyeIntrinsics(
            c.at("fx").get<double>(), c.at("fy").get<double>(), c.at("cx").get<double>(),
            c.at("cy").get<double>(),
            {c.at("k").at(0).get<double>(), c.at("k").at(1).get<double>(),
             c.at("k").at(2).get<double>(), c.at("k").at(3).get<double>()},
            c.at("width").get<int>(), c.at("height").get<int>());
        cam.prior = pose_from_json(c.at("prior"));
        rig.cameras.push_back(std::move(cam));
    }
    rig.adjacency = j.at("adjacency").get<std::vector<std::vector<int>>>();
    rig.reference_camera = j.at("reference").get<std::string>();
    rig.validate();
    return rig;
}

inline void write_rig(const RigConfig& rig, const fs::path& path) {
    write_file(path, rig_to_json(rig).dump(2) + "\n");
}

inline RigConfig read_rig(const fs::path& path) {
    try {
        return rig_from_json(json::parse(read_file(path)));
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Trajectory / extrinsics / metrics JSON

struct TrajectorySample {
    int t = 0;
    RigidPose world_from_rig;
};

inline void write_trajectory(const std::vector<TrajectorySample>& traj, const fs::path& path) {
    json j = json::array();
    for (const auto& s : traj) {
        json e = pose_to_json(s.world_from_rig);
        json rec;
        rec["t"] = s.t;
        rec["R"] = e["R"];
        rec["tvec"] = e["t"];
        j.push_back(std::move(rec));
    }
    write_file(path, j.dump(2) + "\n");
}

inline std::vector<TrajectorySample> read_trajectory(const fs::path& path) {
    std::vector<TrajectorySample> out;
    try {
        const json j = json::parse(read_file(path));
        for (const auto& rec : j)
            out.push_back({rec.at("t").get<int>(), pose_from_json(rec, "R", "tvec")});
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return out;
}

inline void write_extrinsics(const std::vector<std::pair<std::string, RigidPose>>& ext,
                             const fs::path& path) {
    json j = json::array();
    for (const auto& [id, pose] : ext) {
        json e = pose_to_json(pose);
        json rec;
        rec["id"] = id;
        rec["R"] = e["R"];
        rec["tvec"] = e["t"];
        j.push_back(std::move(rec));
    }
    write_file(path, j.dump(2) + "\n");
}

inline std::vector<std::pair<std::string, RigidPose>> read_extrinsics(const fs::path& path) {
    std::vector<std::pair<std::string, RigidPose>> out;
    try {
        const json j = json::parse(read_file(path));
        for (const auto& rec : j)
            out.emplace_back(rec.at("id").get<std::string>(), pose_from_json(rec, "R", "tvec"));
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return out;
}

// ---------------------------------------------------------------------------
// ASCII PLY

struct PlyPoint {
    Vec3 x = Vec3::Zero();
    std::array<std::uint8_t, 3> rgb{200, 200, 200};
};

inline void write_ply_points(const std::vector<PlyPoint>& pts, const fs::path& path) {
    std::string out = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(pts.size()) +
                      "\nproperty float x\nproperty float y\nproperty float z\n"
                      "property uchar red\nproperty uchar green\nproperty uchar blue\n"
                      "end_header\n";
    out.reserve(out.size() + pts.size() * 48);
    char buf[128];
    for (const auto& p : pts) {
        std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %d %d %d\n", p.x.x(), p.x.y(), p.x.z(),
                      p.rgb[0], p.rgb[1], p.rgb[2]);
        out += buf;
    }
    write_file(path, out);
}

namespace detail {

inline const char* parse_double(const char* p, const char* end, double& out,
                                const fs::path& path, std::size_t lineno) {
    while (p < end && (*p == ' ' || *p == '\t')) ++p;
    const auto [next, ec] = std::from_chars(p, end, out);
    if (ec != std::errc{})
        throw ValidationError(path.string() + ": bad number at line " + std::to_string(lineno));
    return next;
}

struct PlyHeader {
    std::size_t vertex_count = 0;
    std::vector<std::string> properties;
    std::size_t body_offset = 0;
};

inline PlyHeader parse_ply_header(const std::string& data, const fs::path& path) {
    PlyHeader h;
    std::size_t pos = 0;
    std::size_t lineno = 0;
    bool ascii = false;
    while (pos < data.size()) {
        const std::size_t eol = data.find('\n', pos);
        if (eol == std::string::npos) break;
        const std::string line = data.substr(pos, eol - pos);
        pos = eol + 1;
        ++lineno;
        if (lineno == 1 && line != "ply") throw ValidationError(path.string() + ": not a PLY file");
        if (line.rfind("format", 0) == 0) ascii = line.find("ascii") != std::string::npos;
        if (line.rfind("element vertex", 0) == 0)
            h.vertex_count = std::stoull(line.substr(std::string("element vertex").size()));
        if (line.rfind("property", 0) == 0) {
            const std::size_t sp = line.rfind(' ');
            h.properties.push_back(line.substr(sp + 1));
        }
        if (line == "end_header") {
            h.body_offset = pos;
            if (!ascii) throw ValidationError(path.string() + ": only ASCII PLY is supported");
            return h;
        }
    }
    throw ValidationError(path.string() + ": PLY header has no end_header");
}

} // namespace detail

inline std::vector<PlyPoint> read_ply_points(const fs::path& path) {
    const std::string data = read_file(path);
    const auto header = detail::parse_ply_header(data, path);
    std::vector<PlyPoint> out;
    out.reserve(header.vertex_count);
    const char* p = data.data() + header.body_offset;
    const char* end = data.data() + data.size();
    const std::size_t nprops = header.properties.size();
    for (std::size_t i = 0; i < header.vertex_count; ++i) {
        PlyPoint pt;
        for (std::size_t k = 0; k < nprops; ++k) {
            double v;
            p = detail::parse_double(p, end, v, path, i + 1);
            if (k < 3)
                pt.x[static_cast<int>(k)] = v;
            else if (k < 6)
                pt.rgb[k - 3] = static_cast<std::uint8_t>(v);
        }
        while (p < end && *p != '\n') ++p;
        if (p < end) ++p;
        out.push_back(pt);
    }
    return out;
}

struct PlyGaussian {
    Vec3 mu = Vec3::Zero();
    // upper triangle of the covariance: xx, xy, xz, yy, yz, zz
    std::array<double, 6> cov{};
};

inline void write_ply_gaussians(const std::vector<PlyGaussian>& gs, const fs::path& path) {
    std::string out = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(gs.size()) +
                      "\nproperty float x\nproperty float y\nproperty float z\n"
                      "property float cov_xx\nproperty float cov_xy\nproperty float cov_xz\n"
                      "property float cov_yy\nproperty float cov_yz\nproperty float cov_zz\n"
                      "end_header\n";
    char buf[256];
    for (const auto& g : gs) {
        std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %.9g %.9g %.9g %.9g %.9g %.9g\n",
                      g.mu.x(), g.mu.y(), g.mu.z(), g.cov[0], g.cov[1], g.cov[2], g.cov[3],
                      g.cov[4], g.cov[5]);
        out += buf;
    }
    write_file(path, out);
}

inline std::vector<PlyGaussian> read_ply_gaussians(const fs::path& path) {
    const std::string data = read_file(path);
    const auto header = detail::parse_ply_header(data, path);
    if (header.properties.size() < 9)
        throw ValidationError(path.string() + ": gaussian PLY needs 9 properties");
    std::vector<PlyGaussian> out;
    out.reserve(header.vertex_count);
    const char* p = data.data() + header.body_offset;
    const char* end = data.data() + data.size();
    for (std::size_t i = 0; i < header.vertex_count; ++i) {
        PlyGaussian g;
        double v;
        for (int k = 0; k < 3; ++k) {
            p = detail::parse_double(p, end, v, path, i + 1);
            g.mu[k] = v;
        }
        for (int k = 0; k < 6; ++k) {
            p = detail::parse_double(p, end, v, path, i + 1);
            g.cov[static_cast<std::size_t>(k)] = v;
        }
        while (p < end && *p != '\n') ++p;
        if (p < end) ++p;
        out.push_back(g);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sequence manifest: per-camera, per-frame mask channel paths + proposals.

struct ManifestProposal {
    std::string mask;
    double det = 0.0;
};

struct ManifestFrame {
    int t = 0;
    std::string frame;   // grayscale image, optional
    std::string motion;  // optional (computed from frames when absent)
    std::string wheels;
    std::string vehicle; // ground-truth vehicle mask channel, optional
    std::string rigid;   // written by the maskgate stage
    std::string render;  // written by the maskgate stage
    std::vector<ManifestProposal> proposals;
};

struct ManifestCamera {
    std::string id;
    std::vector<ManifestFrame> frames;
};

struct SequenceManifest {
    int width = 0, height = 0;
    std::vector<ManifestCamera> cameras;
    fs::path base_dir; // directory of the manifest file; paths are relative to it

    fs::path resolve(const std::string& rel) const { return base_dir / rel; }

    const ManifestCamera& camera(const std::string& id) const {
        for (const auto& c : cameras)
            if (c.id == id) return c;
        throw ValidationError("manifest: unknown camera " + id);
    }
};

inline json manifest_to_json(const SequenceManifest& m) {
    json j;
    j["width"] = m.width;
    j["height"] = m.height;
    j["cameras"] = json::array();
    for (const auto& cam : m.cameras) {
        json c;
        c["id"] = cam.id;
        c["frames"] = json::array();
        for (const auto& f : cam.frames) {
            json fr;
            fr["t"] = f.t;
            auto put = [&fr](const char* key, const std::string& v) {
                if (!v.empty()) fr[key] = v;
            };
            put("frame", f.frame);
            put("motion", f.motion);
            put("wheels", f.wheels);
            put("vehicle", f.vehicle);
            put("rigid", f.rigid);
            put("render", f.render);
            fr["proposals"] = json::array();
            for (const auto& p : f.proposals)
                fr["proposals"].push_back({{"mask", p.mask}, {"det", p.det}});
            c["frames"].push_back(std::move(fr));
        }
        j["cameras"].push_back(std::move(c));
    }
    return j;
}

inline SequenceManifest manifest_from_json(const json& j, const fs::path& base_dir) {
    SequenceManifest m;
    m.base_dir = base_dir;
    m.width = j.at("width").get<int>();
    m.height = j.at("height").get<int>();
    for (const auto& c : j.at("cameras")) {
        ManifestCamera cam;
        cam.id = c.at("id").get<std::string>();
        for (const auto& fr : c.at("frames")) {
            ManifestFrame f;
            f.t = fr.at("t").get<int>();
            f.frame = fr.value("frame", "");
            f.motion = fr.value("motion", "");
            f.wheels = fr.value("wheels", "");
            f.vehicle = fr.value("vehicle", "");
            f.rigid = fr.value("rigid", "");
            f.render = fr.value("render", "");
            if (fr.contains("proposals"))
                for (const auto& p : fr.at("proposals"))
                    f.proposals.push_back(
                        {p.at("mask").get<std::string>(), p.at("det").get<double>()});
            cam.frames.push_back(std::move(f));
        }
        m.cameras.push_back(std::move(cam));
    }
    return m;
}

inline void write_manifest(const SequenceManifest& m, const fs::path& path) {
    write_file(path, manifest_to_json(m).dump(2) + "\n");
}

inline SequenceManifest read_manifest(const fs::path& path) {
    try {
        return manifest_from_json(json::parse(read_file(path)), path.parent_path());
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

/// Existence + dimension consistency of every referenced mask file.
inline void validate_manifest(const SequenceManifest& m) {
    auto check = [&](const std::string& rel) {
        if (rel.empty()) return;
        const fs::path p = m.resolve(rel);
        if (!fs::exists(p)) throw ValidationError("manifest references missing file " + p.string());
        const auto raw = detail::read_pgm_raw(p);
        if (raw.width != m.width || raw.height != m.height)
            throw ValidationError("manifest: " + p.string() + " has inconsistent dimensions");
    };
    for (const auto& cam : m.cameras)
        for (const auto& f : cam.frames) {
            check(f.frame);
            check(f.motion);
            check(f.wheels);
            check(f.vehicle);
            check(f.rigid);
            check(f.render);
            for (const auto& p : f.proposals) check(p.mask);
        }
}

} // namespace io
} // namespace rigsfm
