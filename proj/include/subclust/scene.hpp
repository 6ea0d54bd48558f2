#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "subclust/conic.hpp"
#include "subclust/errors.hpp"
#include "subclust/instance.hpp"
#include "subclust/rng.hpp"

namespace subclust {

struct DomainBox {
    Eigen::Vector2d min{-1.0, -1.0};
    Eigen::Vector2d max{1.0, 1.0};

    bool contains(const Eigen::Vector2d& p) const {
        return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
    }
};

struct StructureSpec {
    StructureKind kind = StructureKind::line;
    int points = 100;
};

/// Specification of one synthetic 2-D scene. kind of every structure must be
/// line, circle, or ellipse; the minimal per-structure sample counts are
/// 2 / 3 / 5 respectively.
struct SceneSpec {
    std::vector<StructureSpec> structures;
    double noise_sigma = 0.05;
    int outliers = 0;
    DomainBox box;
    std::uint64_t seed = 0;

    void validate() const {
        if (structures.empty()) throw ValidationError("scene spec: no structures");
        for (const auto& s : structures) {
            if (s.kind == StructureKind::conic)
                throw ValidationError("scene spec: generators support line/circle/ellipse only");
            if (s.points < minimal_support(s.kind))
                throw ValidationError(std::string("scene spec: ") + kind_name(s.kind) + " needs at least " +
                                      std::to_string(minimal_support(s.kind)) + " points");
        }
        if (noise_sigma < 0.0) throw ValidationError("scene spec: negative noise sigma");
        if (outliers < 0) throw ValidationError("scene spec: negative outlier count");
        if (!(box.min.x() < box.max.x()) || !(box.min.y() < box.max.y()))
            throw ValidationError("scene spec: empty domain box");
    }
};

/// Ground-truth description of one generated structure.
struct GeneratedStructure {
    StructureKind kind;
    Conic conic;
    // line: the two defining endpoints; circle: center + radius;
    // ellipse: full parametric geometry.
    Eigen::Vector2d line_p0{0, 0}, line_p1{0, 0};
    CircleGeometry circle{{0, 0}, 0};
    EllipseGeometry ellipse{{0, 0}, 0, 0, 0};
};

struct GeneratedScene {
    Instance instance;
    std::vector<GeneratedStructure> structures;
};

namespace detail {

constexpr int kRetryBudget = 100;

inline GeneratedStructure sample_structure(StructureKind kind, const DomainBox& box, Sampler& rng) {
    for (int attempt = 0; attempt < kRetryBudget; ++attempt) {
        GeneratedStructure g;
        g.kind = kind;
        switch (kind) {
            case StructureKind::line: {
                const Eigen::Vector2d p0(rng.uniform(box.min.x(), box.max.x()),
                                         rng.uniform(box.min.y(), box.max.y()));
                const Eigen::Vector2d p1(rng.uniform(box.min.x(), box.max.x()),
                                         rng.uniform(box.min.y(), box.max.y()));
                if ((p1 - p0).norm() < 1e-6) continue;
                const Eigen::Vector2d dir = (p1 - p0).normalized();
                g.line_p0 = p0;
                g.line_p1 = p1;
                g.conic = make_conic(0.0, 0.0, 0.0, -dir.y(), dir.x(),
                                     dir.y() * p0.x() - dir.x() * p0.y());
                return g;
            }
            case StructureKind::circle: {
                const Eigen::Vector2d c(rng.uniform(box.min.x(), box.max.x()),
                                        rng.uniform(box.min.y(), box.max.y()));
                const double r = rng.uniform(0.2, 0.8);
                if (!box.contains(c + Eigen::Vector2d(r, r)) || !box.contains(c - Eigen::Vector2d(r, r)))
                    continue;
                g.circle = {c, r};
                g.conic = make_conic(1.0, 0.0, 1.0, -2.0 * c.x(), -2.0 * c.y(),
                                     c.squaredNorm() - r * r);
                return g;
            }
            case StructureKind::ellipse: {
                const Eigen::Vector2d c(rng.uniform(box.min.x(), box.max.x()),
                                        rng.uniform(box.min.y(), box.max.y()));
                const double s1 = rng.uniform(0.2, 0.8);
                const double s2 = rng.uniform(0.2, 0.8);
                const double phi = rng.uniform(0.0, std::numbers::pi);
                const double a = std::max(s1, s2), b = std::min(s1, s2);
                if (a / b < 1.2) continue;  // keep ellipses visibly non-circular
                // Half extents of the rotated ellipse's bounding box.
                const double ca = std::cos(phi), sa = std::sin(phi);
                const double ex = std::sqrt(a * a * ca * ca + b * b * sa * sa);
                const double ey = std::sqrt(a * a * sa * sa + b * b * ca * ca);
                if (!box.contains(c + Eigen::Vector2d(ex, ey)) || !box.contains(c - Eigen::Vector2d(ex, ey)))
                    continue;
                g.ellipse = {c, a, b, phi};
                // Expand ((x-c) rotated by -phi) scaled by (1/a, 1/b), squared norm = 1.
                const double A = ca * ca / (a * a) + sa * sa / (b * b);
                const double B = 2.0 * ca * sa * (1.0 / (a * a) - 1.0 / (b * b));
                const double C = sa * sa / (a * a) + ca * ca / (b * b);
                const double D = -2.0 * A * c.x() - B * c.y();
                const double E = -B * c.x() - 2.0 * C * c.y();
                const double F = A * c.x() * c.x() + B * c.x() * c.y() + C * c.y() * c.y() - 1.0;
                g.conic = make_conic(A, B, C, D, E, F);
                return g;
            }
            default:
                throw ValidationError("sample_structure: unsupported kind");
        }
    }
    throw GenerationError(std::string("could not place a ") + kind_name(kind) +
                          " inside the domain box after " + std::to_string(kRetryBudget) + " attempts");
}

inline Eigen::Vector2d sample_on_structure(const GeneratedStructure& g, Sampler& rng) {
    switch (g.kind) {
        case StructureKind::line: {
            const double t = rng.uniform01();
            return g.line_p0 + t * (g.line_p1 - g.line_p0);
        }
        case StructureKind::circle: {
            const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
            return g.circle.center + g.circle.radius * Eigen::Vector2d(std::cos(t), std::sin(t));
        }
        case StructureKind::ellipse: {
            const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
            return g.ellipse.point_at(t);
        }
        default:
            throw ValidationError("sample_on_structure: unsupported kind");
    }
}

}  // namespace detail

/// Generate a scene: structures sampled in spec order, per-point isotropic
/// Gaussian coordinate noise, optional uniform background outliers (labelled
/// with the last id), and a seeded random permutation of the point order.
/// Deterministic function of (spec, name).
inline GeneratedScene generate_scene(const SceneSpec& spec, const std::string& name) {
    spec.validate();
    Sampler rng(spec.seed);

    GeneratedScene out;
    std::vector<Eigen::Vector2d> pts;
    std::vector<int> labels;

    int label = 0;
    for (const auto& s : spec.structures) {
        GeneratedStructure g = detail::sample_structure(s.kind, spec.box, rng);
        for (int i = 0; i < s.points; ++i) {
            Eigen::Vector2d p = detail::sample_on_structure(g, rng);
            if (spec.noise_sigma > 0.0) {
                p.x() += spec.noise_sigma * rng.normal();
                p.y() += spec.noise_sigma * rng.normal();
            }
            pts.push_back(p);
            labels.push_back(label);
        }
        out.structures.push_back(std::move(g));
        ++label;
    }
    for (int i = 0; i < spec.outliers; ++i) {
        pts.emplace_back(rng.uniform(spec.box.min.x(), spec.box.max.x()),
                         rng.uniform(spec.box.min.y(), spec.box.max.y()));
        labels.push_back(label);
    }

    std::vector<std::size_t> order(pts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);

    Instance inst;
    inst.name = name;
    inst.points.resize(2, static_cast<Eigen::Index>(pts.size()));
    inst.labels.resize(pts.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        inst.points.col(static_cast<Eigen::Index>(i)) = pts[order[i]];
        inst.labels[i] = labels[order[i]];
    }
    // The permutation can leave labels non-contiguous only if a structure has
    // zero points, which validate() forbids; keep ids as assigned.
    std::ostringstream kinds;
    for (std::size_t i = 0; i < spec.structures.size(); ++i) {
        if (i) kinds << ",";
        kinds << kind_name(spec.structures[i].kind) << ":" << spec.structures[i].points;
    }
    inst.meta["structures"] = kinds.str();
    inst.meta["noise_sigma"] = std::to_string(spec.noise_sigma);
    inst.meta["source"] = "generator";
    inst.validate();
    out.instance = std::move(inst);
    return out;
}

/// The four-structure mixed-type scene: exactly one line, two ellipses, and
/// one circle.
inline GeneratedScene make_lce_scene(const SceneSpec& spec, const std::string& name) {
    int lines = 0, circles = 0, ellipses = 0;
    for (const auto& s : spec.structures) {
        if (s.kind == StructureKind::line) ++lines;
        if (s.kind == StructureKind::circle) ++circles;
        if (s.kind == StructureKind::ellipse) ++ellipses;
    }
    if (lines != 1 || circles != 1 || ellipses != 2)
        throw ValidationError("lce scene requires exactly one line, two ellipses, and one circle");
    return generate_scene(spec, name);
}

inline Instance make_lce_instance(const SceneSpec& spec, const std::string& name) {
    return make_lce_scene(spec, name).instance;
}

/// Single-type multi-model scene: M structures of one kind, M in 2..6.
inline GeneratedScene make_multimodel_scene(const SceneSpec& spec, const std::string& name) {
    if (spec.structures.size() < 2 || spec.structures.size() > 6)
        throw ValidationError("multimodel scene requires 2..6 structures");
    for (const auto& s : spec.structures)
        if (s.kind != spec.structures.front().kind)
            throw ValidationError("multimodel scene requires a single structure kind");
    return generate_scene(spec, name);
}

inline Instance make_multimodel_instance(const SceneSpec& spec, const std::string& name) {
    return make_multimodel_scene(spec, name).instance;
}

/// The canonical mixed scene spec: line, ellipse, ellipse, circle.
inline SceneSpec default_lce_spec(int points_per_structure = 100, double noise_sigma = 0.05,
                                  std::uint64_t seed = 0) {
    SceneSpec spec;
    spec.structures = {{StructureKind::line, points_per_structure},
                       {StructureKind::ellipse, points_per_structure},
                       {StructureKind::ellipse, points_per_structure},
                       {StructureKind::circle, points_per_structure}};
    spec.noise_sigma = noise_sigma;
    spec.seed = seed;
    return spec;
}

// ---------------------------------------------------------------------------
// JSON mirror of SceneSpec (generator CLI spec files)
// ---------------------------------------------------------------------------

inline SceneSpec scene_spec_from_json(const json& j, const std::string& context) {
    if (!j.is_object()) throw ParseError(context + ": expected a JSON object");
    static const std::vector<std::string> known{"structures", "noise_sigma", "outliers", "domain_box", "seed"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ParseError(context + ": unknown key '" + key + "'");
    }
    SceneSpec spec;
    if (!j.contains("structures") || !j.at("structures").is_array())
        throw ParseError(context + ": missing or non-array field 'structures'");
    spec.structures.clear();
    for (const auto& s : j.at("structures")) {
        if (!s.is_object() || !s.contains("kind") || !s.contains("points"))
            throw ParseError(context + ": each structure needs 'kind' and 'points'");
        StructureSpec ss;
        ss.kind = kind_from_name(s.at("kind").get<std::string>());
        if (!s.at("points").is_number_integer()) throw ParseError(context + ": structure 'points' must be an integer");
        ss.points = s.at("points").get<int>();
        spec.structures.push_back(ss);
    }
    if (j.contains("noise_sigma")) spec.noise_sigma = detail::require_finite_number(j.at("noise_sigma"), context + ": noise_sigma");
    if (j.contains("outliers")) {
        if (!j.at("outliers").is_number_integer()) throw ParseError(context + ": 'outliers' must be an integer");
        spec.outliers = j.at("outliers").get<int>();
    }
    if (j.contains("domain_box")) {
        const auto& b = j.at("domain_box");
        if (!b.is_object() || !b.contains("min") || !b.contains("max") || !b.at("min").is_array() ||
            !b.at("max").is_array() || b.at("min").size() != 2 || b.at("max").size() != 2)
            throw ParseError(context + ": 'domain_box' must be {\"min\":[x,y],\"max\":[x,y]}");
        spec.box.min = {detail::require_finite_number(b.at("min").at(0), context + ": domain_box.min[0]"),
                        detail::require_finite_number(b.at("min").at(1), context + ": domain_box.min[1]")};
        spec.box.max = {detail::require_finite_number(b.at("max").at(0), context + ": domain_box.max[0]"),
                        detail::require_finite_number(b.at("max").at(1), context + ": domain_box.max[1]")};
    }
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_integer()) throw ParseError(context + ": 'seed' must be an integer");
        spec.seed = j.at("seed").get<std::uint64_t>();
    }
    spec.validate();
    return spec;
}

inline ordered_json scene_spec_to_json(const SceneSpec& spec) {
    ordered_json j;
    ordered_json arr = ordered_json::array();
    for (const auto& s : spec.structures) arr.push_back({{"kind", kind_name(s.kind)}, {"points", s.points}});
    j["structures"] = std::move(arr);
    j["noise_sigma"] = spec.noise_sigma;
    j["outliers"] = spec.outliers;
    j["domain_box"] = {{"min", {spec.box.min.x(), spec.box.min.y()}},
                       {"max", {spec.box.max.x(), spec.box.max.y()}}};
    j["seed"] = spec.seed;
    return j;
}

inline SceneSpec read_scene_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return scene_spec_from_json(j, path.string());
}

}  // namespace subclust
