#include "ptrap/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace ptrap {

namespace {

bool circle_contains(const Circle& c, const Vec2& p) {
    const double dx = p.x() - c.center.x();
    const double dy = p.y() - c.center.y();
    return dx * dx + dy * dy <= c.radius * c.radius;
}

bool ellipse_contains(const Ellipse& e, const Vec2& p) {
    const double u = (p.x() - e.center.x()) / e.a;
    const double v = (p.y() - e.center.y()) / e.b;
    return u * u + v * v <= 1.0;
}

bool rect_contains(const Rect& r, const Vec2& p) {
    return p.x() >= r.lo.x() && p.x() <= r.hi.x() && p.y() >= r.lo.y() && p.y() <= r.hi.y();
}

// Even-odd rule; boundary points count as inside (within fp resolution of
// the crossing test).
bool polygon_contains(const Polygon& poly, const Vec2& p) {
    const auto& v = poly.vertices;
    const std::size_t n = v.size();
    if (n < 3) return false;
    bool in = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const double xi = v[i].x(), yi = v[i].y();
        const double xj = v[j].x(), yj = v[j].y();
        // on-edge check via cross product within the edge's bbox
        const double cross = (xj - xi) * (p.y() - yi) - (yj - yi) * (p.x() - xi);
        if (cross == 0.0 && std::min(xi, xj) <= p.x() && p.x() <= std::max(xi, xj) &&
            std::min(yi, yj) <= p.y() && p.y() <= std::max(yi, yj)) {
            return true;
        }
        if ((yi > p.y()) != (yj > p.y())) {
            const double t = (p.y() - yi) / (yj - yi);
            if (p.x() < xi + t * (xj - xi)) in = !in;
        }
    }
    return in;
}

}  // namespace

bool shape_contains(const Shape& s, const Vec2& p) {
    return std::visit(
        [&p](const auto& sh) -> bool {
            using T = std::decay_t<decltype(sh)>;
            if constexpr (std::is_same_v<T, Circle>) return circle_contains(sh, p);
            else if constexpr (std::is_same_v<T, Ellipse>) return ellipse_contains(sh, p);
            else if constexpr (std::is_same_v<T, Rect>) return rect_contains(sh, p);
            else return polygon_contains(sh, p);
        },
        s);
}

void shape_bbox(const Shape& s, Vec2& lo, Vec2& hi) {
    std::visit(
        [&](const auto& sh) {
            using T = std::decay_t<decltype(sh)>;
            if constexpr (std::is_same_v<T, Circle>) {
                lo = sh.center.array() - sh.radius;
                hi = sh.center.array() + sh.radius;
            } else if constexpr (std::is_same_v<T, Ellipse>) {
                lo = {sh.center.x() - sh.a, sh.center.y() - sh.b};
                hi = {sh.center.x() + sh.a, sh.center.y() + sh.b};
            } else if constexpr (std::is_same_v<T, Rect>) {
                lo = sh.lo;
                hi = sh.hi;
            } else {
                lo = {1e300, 1e300};
                hi = {-1e300, -1e300};
                for (const auto& v : sh.vertices) {
                    lo = lo.cwiseMin(v);
                    hi = hi.cwiseMax(v);
                }
            }
        },
        s);
}

double shape_bound_area(const Shape& s) {
    Vec2 lo, hi;
    shape_bbox(s, lo, hi);
    return (hi.x() - lo.x()) * (hi.y() - lo.y());
}

std::string role_name(Role r) {
    switch (r) {
        case Role::RF1: return "RF1";
        case Role::RF2: return "RF2";
        case Role::DC: return "DC";
        case Role::GROUND: return "GROUND";
    }
    return "GROUND";
}

Role role_from_name(const std::string& name) {
    if (name == "RF1") return Role::RF1;
    if (name == "RF2") return Role::RF2;
    if (name == "DC") return Role::DC;
    if (name == "GROUND") return Role::GROUND;
    throw GeometryError("unknown electrode role: " + name);
}

bool ElectrodePatch::contains(const Vec2& p) const {
    if (!std::isfinite(p.x()) || !std::isfinite(p.y())) return false;
    for (const auto& c : clips) {
        if (c.normal.dot(p) < c.offset) return false;
    }
    if (!shape_contains(outer, p)) return false;
    for (const auto& h : holes) {
        if (shape_contains(h, p)) return false;
    }
    return true;
}

void ElectrodePatch::bbox(Vec2& lo, Vec2& hi) const {
    shape_bbox(outer, lo, hi);
    // Clips only shrink; intersect axis-aligned ones for a tighter grid.
    for (const auto& c : clips) {
        if (c.normal.x() == 0.0 && c.normal.y() > 0.0) lo.y() = std::max(lo.y(), c.offset / c.normal.y());
        if (c.normal.x() == 0.0 && c.normal.y() < 0.0) hi.y() = std::min(hi.y(), c.offset / c.normal.y());
        if (c.normal.y() == 0.0 && c.normal.x() > 0.0) lo.x() = std::max(lo.x(), c.offset / c.normal.x());
        if (c.normal.y() == 0.0 && c.normal.x() < 0.0) hi.x() = std::min(hi.x(), c.offset / c.normal.x());
    }
}

double PatchCells::total_area() const {
    double s = 0.0;
    for (double a : area) s += a;
    return s;
}

PatchCells discretize(const ElectrodePatch& patch, double max_cell) {
    if (!(max_cell > 0.0)) throw GeometryError("discretize: max_cell must be > 0");
    Vec2 lo, hi;
    patch.bbox(lo, hi);
    const double w = hi.x() - lo.x(), h = hi.y() - lo.y();
    if (!(w > 0.0) || !(h > 0.0)) throw GeometryError("discretize: empty patch bbox");
    const int nx = std::max(1, static_cast<int>(std::ceil(w / max_cell)));
    const int ny = std::max(1, static_cast<int>(std::ceil(h / max_cell)));
    const double hx = w / nx, hy = h / ny;

    constexpr int kSub = 8;
    PatchCells cells;
    cells.x.reserve(static_cast<std::size_t>(nx) * ny / 2);
    cells.y.reserve(cells.x.capacity());
    cells.area.reserve(cells.x.capacity());

    for (int iy = 0; iy < ny; ++iy) {
        const double yc = lo.y() + (iy + 0.5) * hy;
        for (int ix = 0; ix < nx; ++ix) {
            const double xc = lo.x() + (ix + 0.5) * hx;
            const bool c0 = patch.contains({xc, yc});
            int corners = 0;
            corners += patch.contains({xc - 0.5 * hx, yc - 0.5 * hy});
            corners += patch.contains({xc + 0.5 * hx, yc - 0.5 * hy});
            corners += patch.contains({xc - 0.5 * hx, yc + 0.5 * hy});
            corners += patch.contains({xc + 0.5 * hx, yc + 0.5 * hy});
            if (c0 && corners == 4) {
                cells.x.push_back(xc);
                cells.y.push_back(yc);
                cells.area.push_back(hx * hy);
            } else if (c0 || corners > 0) {
                // boundary cell: subsample
                int k = 0;
                double sx = 0.0, sy = 0.0;
                for (int sy_i = 0; sy_i < kSub; ++sy_i) {
                    const double py = yc + ((sy_i + 0.5) / kSub - 0.5) * hy;
                    for (int sx_i = 0; sx_i < kSub; ++sx_i) {
                        const double px = xc + ((sx_i + 0.5) / kSub - 0.5) * hx;
                        if (patch.contains({px, py})) {
                            ++k;
                            sx += px;
                            sy += py;
                        }
                    }
                }
                if (k > 0) {
                    cells.x.push_back(sx / k);
                    cells.y.push_back(sy / k);
                    cells.area.push_back(hx * hy * k / (kSub * kSub));
                }
            }
        }
    }
    if (cells.size() < 16) throw GeometryError("resolution-too-coarse: fewer than 16 cells");
    return cells;
}

const ElectrodePatch* TrapLayout::find(const std::string& id) const {
    for (const auto& p : patches) {
        if (p.id == id) return &p;
    }
    return nullptr;
}

const ElectrodePatch& TrapLayout::require(const std::string& id) const {
    const ElectrodePatch* p = find(id);
    if (!p) throw GeometryError("no such electrode: " + id);
    return *p;
}

std::vector<std::string> TrapLayout::ids_with_role(Role r) const {
    std::vector<std::string> out;
    for (const auto& p : patches) {
        if (p.role == r) out.push_back(p.id);
    }
    return out;
}

void PaperTrapParams::validate() const {
    auto pos = [](double v, const char* what) {
        if (!(v > 0.0)) throw GeometryError(std::string("invalid-geometry: ") + what + " must be > 0");
    };
    pos(ground_diameter, "ground_diameter");
    pos(rf_major, "rf_major");
    pos(rf_minor, "rf_minor");
    pos(via_diameter, "via_diameter");
    pos(dc_pad_size, "dc_pad_size");
    if (gap < 0.0) throw GeometryError("invalid-geometry: gap must be >= 0");
    if (rf_major < rf_minor) throw GeometryError("invalid-geometry: rf_major < rf_minor");
    // via must stay inside the ground disk
    if (std::abs(via_offset_y) + 0.5 * via_diameter > 0.5 * ground_diameter) {
        throw GeometryError("invalid-geometry: via extends outside the ground electrode");
    }
    // ground disk (plus gap) must stay inside the RF ellipse
    const double hole_r = 0.5 * ground_diameter + gap;
    if (hole_r + std::abs(rf_offset_y) >= 0.5 * rf_minor || hole_r >= 0.5 * rf_major) {
        throw GeometryError("invalid-geometry: ground disk + gap does not fit inside the RF ellipse");
    }
}

TrapLayout build_paper_trap(const PaperTrapParams& params) {
    params.validate();
    const double half_gap = params.gap_centers ? 0.5 * params.gap : params.gap;
    const double grow = params.gap_centers ? 0.5 * params.gap : 0.0;

    TrapLayout layout;
    layout.gap_width = params.gap;

    // center ground disk (metal extent as stated; in the field model it is
    // passive, so only its complement matters)
    ElectrodePatch gnd;
    gnd.id = "gnd";
    gnd.role = Role::GROUND;
    gnd.outer = Circle{{0.0, 0.0}, 0.5 * params.ground_diameter};
    layout.patches.push_back(gnd);

    // RF annulus: ellipse minus (ground disk + gap share), split along the
    // line through the ellipse center. RF1 = -y half (next to the ground
    // disk), RF2 = +y half.
    const double a = 0.5 * params.rf_major + grow;
    const double b = 0.5 * params.rf_minor + grow;
    const double hole_r = 0.5 * params.ground_diameter + half_gap;
    const Ellipse rf_outer{{0.0, params.rf_offset_y}, a, b};
    const Circle rf_hole{{0.0, 0.0}, hole_r};

    ElectrodePatch rf1;
    rf1.id = "rf1";
    rf1.role = Role::RF1;
    rf1.outer = rf_outer;
    rf1.holes.push_back(rf_hole);
    rf1.clips.push_back(HalfPlane{{0.0, -1.0}, -params.rf_offset_y});  // y <= rf_offset_y
    layout.patches.push_back(rf1);

    ElectrodePatch rf2;
    rf2.id = "rf2";
    rf2.role = Role::RF2;
    rf2.outer = rf_outer;
    rf2.holes.push_back(rf_hole);
    rf2.clips.push_back(HalfPlane{{0.0, 1.0}, std::nextafter(params.rf_offset_y, 1.0)});  // y > rf_offset_y
    layout.patches.push_back(rf2);

    // four square DC compensation pads, flanking the RF pad outside its gap
    const double s = params.dc_pad_size;
    const double ax = a + params.gap - grow + half_gap;  // metal edge + one full gap
    const double by_hi = params.rf_offset_y + b + params.gap - grow + half_gap;
    const double by_lo = params.rf_offset_y - b - params.gap + grow - half_gap;
    auto add_pad = [&layout](const std::string& id, double x0, double y0, double x1, double y1) {
        ElectrodePatch p;
        p.id = id;
        p.role = Role::DC;
        p.outer = Rect{{x0, y0}, {x1, y1}};
        layout.patches.push_back(p);
    };
    add_pad("dc_xp", ax, params.rf_offset_y - 0.5 * s, ax + s, params.rf_offset_y + 0.5 * s);
    add_pad("dc_xm", -ax - s, params.rf_offset_y - 0.5 * s, -ax, params.rf_offset_y + 0.5 * s);
    add_pad("dc_yp", -0.5 * s, by_hi, 0.5 * s, by_hi + s);
    add_pad("dc_ym", -0.5 * s, by_lo - s, 0.5 * s, by_lo);
    return layout;
}

namespace {

using nlohmann::json;

json shape_to_json(const Shape& s) {
    return std::visit(
        [](const auto& sh) -> json {
            using T = std::decay_t<decltype(sh)>;
            if constexpr (std::is_same_v<T, Circle>) {
                return {{"kind", "circle"},
                        {"center_m", {sh.center.x(), sh.center.y()}},
                        {"radius_m", sh.radius}};
            } else if constexpr (std::is_same_v<T, Ellipse>) {
                return {{"kind", "ellipse"},
                        {"center_m", {sh.center.x(), sh.center.y()}},
                        {"semi_axes_m", {sh.a, sh.b}}};
            } else if constexpr (std::is_same_v<T, Rect>) {
                return {{"kind", "rect"},
                        {"lo_m", {sh.lo.x(), sh.lo.y()}},
                        {"hi_m", {sh.hi.x(), sh.hi.y()}}};
            } else {
                json verts = json::array();
                for (const auto& v : sh.vertices) verts.push_back({v.x(), v.y()});
                return {{"kind", "polygon"}, {"vertices_m", verts}};
            }
        },
        s);
}

Shape shape_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "circle") {
        auto c = j.at("center_m");
        return Circle{{c.at(0).get<double>(), c.at(1).get<double>()}, j.at("radius_m").get<double>()};
    }
    if (kind == "ellipse") {
        auto c = j.at("center_m");
        auto ab = j.at("semi_axes_m");
        return Ellipse{{c.at(0).get<double>(), c.at(1).get<double>()},
                       ab.at(0).get<double>(), ab.at(1).get<double>()};
    }
    if (kind == "rect") {
        auto lo = j.at("lo_m");
        auto hi = j.at("hi_m");
        return Rect{{lo.at(0).get<double>(), lo.at(1).get<double>()},
                    {hi.at(0).get<double>(), hi.at(1).get<double>()}};
    }
    if (kind == "polygon") {
        Polygon p;
        for (const auto& v : j.at("vertices_m")) {
            p.vertices.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
        }
        return p;
    }
    throw GeometryError("unknown shape kind: " + kind);
}

}  // namespace

std::string layout_to_json(const TrapLayout& layout) {
    json j;
    j["gap_m"] = layout.gap_width;
    json patches = json::array();
    for (const auto& p : layout.patches) {
        json jp;
        jp["id"] = p.id;
        jp["role"] = role_name(p.role);
        jp["outer"] = shape_to_json(p.outer);
        if (!p.holes.empty()) {
            json holes = json::array();
            for (const auto& h : p.holes) holes.push_back(shape_to_json(h));
            jp["holes"] = holes;
        }
        if (!p.clips.empty()) {
            json clips = json::array();
            for (const auto& c : p.clips) {
                clips.push_back({{"normal", {c.normal.x(), c.normal.y()}}, {"offset_m", c.offset}});
            }
            jp["clips"] = clips;
        }
        patches.push_back(jp);
    }
    j["patches"] = patches;
    return j.dump(2);
}

TrapLayout layout_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw GeometryError(std::string("layout parse error: ") + e.what());
    }
    TrapLayout layout;
    layout.gap_width = j.value("gap_m", 0.0);
    for (const auto& jp : j.at("patches")) {
        ElectrodePatch p;
        p.id = jp.at("id").get<std::string>();
        p.role = role_from_name(jp.at("role").get<std::string>());
        p.outer = shape_from_json(jp.at("outer"));
        if (jp.contains("holes")) {
            for (const auto& h : jp["holes"]) p.holes.push_back(shape_from_json(h));
        }
        if (jp.contains("clips")) {
            for (const auto& c : jp["clips"]) {
                p.clips.push_back(HalfPlane{{c.at("normal").at(0).get<double>(),
                                             c.at("normal").at(1).get<double>()},
                                            c.at("offset_m").get<double>()});
            }
        }
        layout.patches.push_back(std::move(p));
    }
    return layout;
}

}  // namespace ptrap
