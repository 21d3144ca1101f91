#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace ptrap {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Circle {
    Vec2 center;    // m
    double radius;  // m
};

struct Ellipse {
    Vec2 center;  // m
    double a, b;  // semi-axes along x, y (m); axis-aligned
};

struct Rect {
    Vec2 lo, hi;  // m
};

struct Polygon {
    std::vector<Vec2> vertices;  // CCW, m
};

using Shape = std::variant<Circle, Ellipse, Rect, Polygon>;

// Keeps points with normal·p >= offset.
struct HalfPlane {
    Vec2 normal;
    double offset;  // m
};

bool shape_contains(const Shape& s, const Vec2& p);
double shape_bound_area(const Shape& s);
void shape_bbox(const Shape& s, Vec2& lo, Vec2& hi);

enum class Role { RF1, RF2, DC, GROUND };

std::string role_name(Role r);
Role role_from_name(const std::string& name);

struct ElectrodePatch {
    std::string id;
    Role role = Role::GROUND;
    Shape outer;
    std::vector<Shape> holes;
    std::vector<HalfPlane> clips;  // optional linear cuts (RF segmentation)

    // Boundary convention: outer and clips inclusive, holes exclusive.
    bool contains(const Vec2& p) const;
    void bbox(Vec2& lo, Vec2& hi) const;
};

// Planar cells used for quadrature; struct-of-arrays for the hot kernels.
struct PatchCells {
    std::vector<double> x, y, area;  // centroid (m), area (m^2)
    std::size_t size() const { return x.size(); }
    double total_area() const;
};

// Covers the patch with grid cells no larger than max_cell. Cells cut by the
// boundary get their area and centroid from an 8x8 subsample.
// Throws GeometryError("resolution-too-coarse") if fewer than 16 cells result.
PatchCells discretize(const ElectrodePatch& patch, double max_cell);

struct TrapLayout {
    std::vector<ElectrodePatch> patches;
    double gap_width = 0.0;  // m, informational

    const ElectrodePatch* find(const std::string& id) const;
    const ElectrodePatch& require(const std::string& id) const;
    std::vector<std::string> ids_with_role(Role r) const;
};

// Paper geometry. All lengths in meters. Sign convention: the RF ellipse is
// shifted +y, the via (and the trapping point) sit at negative y.
struct PaperTrapParams {
    double ground_diameter = 1.1e-3;
    double rf_major = 5.9e-3;   // full major-axis diameter of the RF pad
    double rf_minor = 2.8e-3;   // full minor-axis diameter
    double rf_offset_y = 5.0e-4;
    double gap = 1.0e-4;
    double via_diameter = 4.0e-4;
    double via_offset_y = -3.0e-4;
    double dc_pad_size = 2.0e-3;   // square side of the four compensation pads
    // The field model puts electrode boundaries at gap centers (standard
    // gapless-plane treatment); set false to assign gaps to ground instead.
    bool gap_centers = true;

    void validate() const;  // throws GeometryError
};

// Center ground disk, elliptical RF annulus split into RF1 (-y half, nearer
// the ground disk) and RF2 (+y half) along the line y = rf_offset_y, and four
// DC pads at +-x, +-y. The via is grounded plated metal: no patch, no hole.
TrapLayout build_paper_trap(const PaperTrapParams& params = {});

// Structured-text (JSON) layout documents; schema in the README.
std::string layout_to_json(const TrapLayout& layout);
TrapLayout layout_from_json(const std::string& text);

}  // namespace ptrap
