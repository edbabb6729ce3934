#include "hexembed/hex_index.hpp"

#include "hex_index_tables.hpp"

#include <algorithm>
#include <array>
#include <cfloat>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace hexembed::h3 {
namespace {

using namespace detail;

constexpr double kEpsilon = 0.0000000000000001;
constexpr double kTwoPi = 6.28318530717958647692528676655900576839433;
constexpr double kDegToRad = 0.0174532925199432957692369076848861271111;
constexpr double kRadToDeg = 57.29577951308232087679815481410517033240547;
constexpr double kSqrt3Over2 = 0.8660254037844386467637231707529361834714;
constexpr double kInvSin60 = 1.1547005383792515290182975610039149112953;
constexpr double kOneThird = 0.333333333333333333333333333333333333333;
constexpr double kOneSeventh = 0.14285714285714285714285714285714285;
constexpr double kAp7RotRads = 0.333473172251832115336090755351601070065900389;
constexpr double kRes0UGnomonic = 0.38196601125010500003;
constexpr double kInvRes0UGnomonic = 2.61803398874989588842;
constexpr double kSqrt7 = 2.6457513110645905905016157536392604257102;
constexpr double kInvSqrt7 = 0.37796447300922722721451653623418006081576;
constexpr int kMaxFaceCoord = 2;
constexpr int kNumHexVerts = 6;
constexpr int kNumPentVerts = 5;

constexpr int kResOffset = 52;
constexpr int kBaseCellOffset = 45;
constexpr int kModeOffset = 59;
constexpr int kCellMode = 1;
constexpr H3Index kInitIndex = 35184372088831ULL;  // every digit set to 7

enum class Overage { kNone, kFaceEdge, kNewFace };

struct Vec2 {
    double x;
    double y;
};

// ---------------------------------------------------------------------------
// index bit fields

int get_res(H3Index h) { return static_cast<int>((h >> kResOffset) & 15U); }
H3Index set_res(H3Index h, int res) {
    return (h & ~(H3Index{15} << kResOffset)) | (H3Index(res) << kResOffset);
}
int get_base_cell(H3Index h) {
    return static_cast<int>((h >> kBaseCellOffset) & 127U);
}
H3Index set_base_cell(H3Index h, int bc) {
    return (h & ~(H3Index{127} << kBaseCellOffset)) |
           (H3Index(bc) << kBaseCellOffset);
}
int get_digit(H3Index h, int r) {
    return static_cast<int>((h >> ((kMaxResolution - r) * 3)) & 7U);
}
H3Index set_digit(H3Index h, int r, int digit) {
    const int off = (kMaxResolution - r) * 3;
    return (h & ~(H3Index{7} << off)) | (H3Index(digit) << off);
}

bool is_class_iii(int res) { return res % 2 == 1; }

bool base_cell_is_pentagon(int bc) {
    return bc >= 0 && bc < kNumBaseCells && kBaseCellData[bc].isPentagon != 0;
}
bool base_cell_is_polar_pentagon(int bc) { return bc == 4 || bc == 117; }
bool base_cell_is_cw_offset(int bc, int face) {
    return kBaseCellData[bc].cwOffsetPent[0] == face ||
           kBaseCellData[bc].cwOffsetPent[1] == face;
}

int leading_nonzero_digit(H3Index h) {
    const int res = get_res(h);
    for (int r = 1; r <= res; ++r) {
        if (int d = get_digit(h, r)) return d;
    }
    return kCenter;
}

// ---------------------------------------------------------------------------
// IJK coordinate algebra

CoordIjk add(CoordIjk a, CoordIjk b) { return {a.i + b.i, a.j + b.j, a.k + b.k}; }
CoordIjk sub(CoordIjk a, CoordIjk b) { return {a.i - b.i, a.j - b.j, a.k - b.k}; }
CoordIjk scale(CoordIjk c, int f) { return {c.i * f, c.j * f, c.k * f}; }
bool same(CoordIjk a, CoordIjk b) { return a.i == b.i && a.j == b.j && a.k == b.k; }

void normalize(CoordIjk& c) {
    if (c.i < 0) {
        c.j -= c.i;
        c.k -= c.i;
        c.i = 0;
    }
    if (c.j < 0) {
        c.i -= c.j;
        c.k -= c.j;
        c.j = 0;
    }
    if (c.k < 0) {
        c.i -= c.k;
        c.j -= c.k;
        c.k = 0;
    }
    const int m = std::min({c.i, c.j, c.k});
    if (m > 0) {
        c.i -= m;
        c.j -= m;
        c.k -= m;
    }
}

// Linear map given the images of the three unit vectors, then normalize.
void remap(CoordIjk& c, CoordIjk iv, CoordIjk jv, CoordIjk kv) {
    c = add(add(scale(iv, c.i), scale(jv, c.j)), scale(kv, c.k));
    normalize(c);
}

void rotate60ccw(CoordIjk& c) { remap(c, {1, 1, 0}, {0, 1, 1}, {1, 0, 1}); }
void rotate60cw(CoordIjk& c) { remap(c, {1, 0, 1}, {1, 1, 0}, {0, 1, 1}); }
void down_ap7(CoordIjk& c) { remap(c, {3, 0, 1}, {1, 3, 0}, {0, 1, 3}); }
void down_ap7r(CoordIjk& c) { remap(c, {3, 1, 0}, {0, 3, 1}, {1, 0, 3}); }
void down_ap3(CoordIjk& c) { remap(c, {2, 0, 1}, {1, 2, 0}, {0, 1, 2}); }
void down_ap3r(CoordIjk& c) { remap(c, {2, 1, 0}, {0, 2, 1}, {1, 0, 2}); }

void up_ap7(CoordIjk& c) {
    const int i = c.i - c.k;
    const int j = c.j - c.k;
    c.i = static_cast<int>(std::lround((3 * i - j) * kOneSeventh));
    c.j = static_cast<int>(std::lround((i + 2 * j) * kOneSeventh));
    c.k = 0;
    normalize(c);
}

void up_ap7r(CoordIjk& c) {
    const int i = c.i - c.k;
    const int j = c.j - c.k;
    c.i = static_cast<int>(std::lround((2 * i + j) * kOneSeventh));
    c.j = static_cast<int>(std::lround((3 * j - i) * kOneSeventh));
    c.k = 0;
    normalize(c);
}

constexpr std::array<CoordIjk, 7> kUnitVecs = {{
    {0, 0, 0}, {0, 0, 1}, {0, 1, 0}, {0, 1, 1}, {1, 0, 0}, {1, 0, 1}, {1, 1, 0},
}};

void step(CoordIjk& c, int digit) {
    if (digit > kCenter && digit < kInvalidDigit) {
        c = add(c, kUnitVecs[digit]);
        normalize(c);
    }
}

int unit_ijk_to_digit(CoordIjk c) {
    normalize(c);
    for (int d = kCenter; d < kInvalidDigit; ++d) {
        if (same(c, kUnitVecs[d])) return d;
    }
    return kInvalidDigit;
}

int rotate_digit_ccw(int d) {
    switch (d) {
        case kK: return kIK;
        case kIK: return kI;
        case kI: return kIJ;
        case kIJ: return kJ;
        case kJ: return kJK;
        case kJK: return kK;
        default: return d;
    }
}

int rotate_digit_cw(int d) {
    switch (d) {
        case kK: return kJK;
        case kJK: return kJ;
        case kJ: return kIJ;
        case kIJ: return kI;
        case kI: return kIK;
        case kIK: return kK;
        default: return d;
    }
}

Vec2 ijk_to_hex2d(CoordIjk h) {
    const int i = h.i - h.k;
    const int j = h.j - h.k;
    return {i - 0.5 * j, j * kSqrt3Over2};
}

CoordIjk hex2d_to_ijk(Vec2 v) {
    CoordIjk h{0, 0, 0};
    const double a1 = std::fabs(v.x);
    const double a2 = std::fabs(v.y);

    // reverse conversion into the ij system
    const double x2 = a2 * kInvSin60;
    const double x1 = a1 + x2 / 2.0;
    const int m1 = static_cast<int>(x1);
    const int m2 = static_cast<int>(x2);
    const double r1 = x1 - m1;
    const double r2 = x2 - m2;

    if (r1 < 0.5) {
        if (r1 < 1.0 / 3.0) {
            h.i = m1;
            h.j = (r2 < (1.0 + r1) / 2.0) ? m2 : m2 + 1;
        } else {
            h.j = (r2 < (1.0 - r1)) ? m2 : m2 + 1;
            h.i = ((1.0 - r1) <= r2 && r2 < (2.0 * r1)) ? m1 + 1 : m1;
        }
    } else {
        if (r1 < 2.0 / 3.0) {
            h.j = (r2 < (1.0 - r1)) ? m2 : m2 + 1;
            h.i = ((2.0 * r1 - 1.0) < r2 && r2 < (1.0 - r1)) ? m1 : m1 + 1;
        } else {
            h.i = m1 + 1;
            h.j = (r2 < (r1 / 2.0)) ? m2 : m2 + 1;
        }
    }

    // fold across the axes if necessary
    if (v.x < 0.0) {
        if (h.j % 2 == 0) {
            const long long axis = h.j / 2;
            const long long diff = h.i - axis;
            h.i = static_cast<int>(h.i - 2.0 * diff);
        } else {
            const long long axis = (h.j + 1) / 2;
            const long long diff = h.i - axis;
            h.i = static_cast<int>(h.i - (2.0 * diff + 1));
        }
    }
    if (v.y < 0.0) {
        h.i = h.i - (2 * h.j + 1) / 2;
        h.j = -h.j;
    }
    normalize(h);
    return h;
}

// ---------------------------------------------------------------------------
// sphere geometry

double pos_angle(double rads) {
    double tmp = (rads < 0.0) ? rads + kTwoPi : rads;
    if (rads >= kTwoPi) tmp -= kTwoPi;
    return tmp;
}

Vec3 lin_comb(double a, Vec3 v1, double b, Vec3 v2) {
    return {a * v1.x + b * v2.x, a * v1.y + b * v2.y, a * v1.z + b * v2.z};
}
Vec3 cross(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
void normalize(Vec3& v) {
    const double n = std::sqrt(dot(v, v));
    const double s = n > 0.0 ? 1.0 / n : 0.0;
    v.x *= s;
    v.y *= s;
    v.z *= s;
}
double dist_sq(Vec3 a, Vec3 b) {
    const Vec3 d = lin_comb(1.0, a, -1.0, b);
    return dot(d, d);
}

Vec3 latlng_to_vec3(double lat, double lng) {
    const double r = std::cos(lat);
    return {std::cos(lng) * r, std::sin(lng) * r, std::sin(lat)};
}

LatLngDeg vec3_to_latlng_deg(Vec3 v) {
    return {std::asin(v.z) * kRadToDeg, std::atan2(v.y, v.x) * kRadToDeg};
}

void tangent_basis(Vec3 p, Vec3& north, Vec3& east) {
    const Vec3 pole{0.0, 0.0, 1.0};
    north = lin_comb(1.0, pole, -dot(pole, p), p);
    normalize(north);
    east = cross(north, p);
}

double azimuth(Vec3 p1, Vec3 p2) {
    Vec3 north;
    Vec3 east;
    tangent_basis(p1, north, east);
    Vec3 proj = lin_comb(1.0, p2, -dot(p2, p1), p1);
    normalize(proj);
    return std::atan2(dot(proj, east), dot(proj, north));
}

Vec2 v2d_intersect(Vec2 p0, Vec2 p1, Vec2 p2, Vec2 p3) {
    const Vec2 s1{p1.x - p0.x, p1.y - p0.y};
    const Vec2 s2{p3.x - p2.x, p3.y - p2.y};
    const double t = (s2.x * (p0.y - p2.y) - s2.y * (p0.x - p2.x)) /
                     (-s2.x * s1.y + s1.x * s2.y);
    return {p0.x + t * s1.x, p0.y + t * s1.y};
}

bool v2d_almost_equal(Vec2 a, Vec2 b) {
    return std::fabs(a.x - b.x) < FLT_EPSILON && std::fabs(a.y - b.y) < FLT_EPSILON;
}

// ---------------------------------------------------------------------------
// face-centered projection

FaceIjk vec3_to_face_ijk(Vec3 p, int res) {
    int face = 0;
    double sqd = 5.0;
    for (int f = 0; f < kNumIcosaFaces; ++f) {
        const double d = dist_sq(kFaceCenterPoint[f], p);
        if (d < sqd) {
            face = f;
            sqd = d;
        }
    }

    double r = std::acos(1 - sqd * 0.5);
    Vec2 v{0.0, 0.0};
    if (r >= kEpsilon) {
        double theta = pos_angle(kFaceAxesAzRadsCII[face][0] -
                                 pos_angle(azimuth(kFaceCenterPoint[face], p)));
        if (is_class_iii(res)) theta = pos_angle(theta - kAp7RotRads);

        // gnomonic scaling, then scale to the resolution's unit length
        r = std::tan(r);
        r *= kInvRes0UGnomonic;
        for (int i = 0; i < res; ++i) r *= kSqrt7;
        v = {r * std::cos(theta), r * std::sin(theta)};
    }
    return {face, hex2d_to_ijk(v)};
}

Vec3 hex2d_to_vec3(Vec2 v, int face, int res, bool substrate) {
    double r = std::sqrt(v.x * v.x + v.y * v.y);
    if (r < kEpsilon) return kFaceCenterPoint[face];

    double theta = std::atan2(v.y, v.x);
    for (int i = 0; i < res; ++i) r *= kInvSqrt7;
    if (substrate) {
        r *= kOneThird;
        if (is_class_iii(res)) r *= kInvSqrt7;
    }
    r *= kRes0UGnomonic;
    r = std::atan(r);

    if (!substrate && is_class_iii(res)) theta = pos_angle(theta + kAp7RotRads);
    theta = pos_angle(kFaceAxesAzRadsCII[face][0] - theta);

    Vec3 north;
    Vec3 east;
    tangent_basis(kFaceCenterPoint[face], north, east);
    const Vec3 dir = lin_comb(std::cos(theta), north, std::sin(theta), east);
    Vec3 out = lin_comb(std::cos(r), kFaceCenterPoint[face], std::sin(r), dir);
    normalize(out);
    return out;
}

Overage adjust_overage_class_ii(FaceIjk& fijk, int res, bool pent_leading4,
                                bool substrate) {
    Overage overage = Overage::kNone;
    CoordIjk& ijk = fijk.coord;

    int max_dim = kMaxDimByCIIRes[res];
    if (substrate) max_dim *= 3;

    const int sum = ijk.i + ijk.j + ijk.k;
    if (substrate && sum == max_dim) {
        overage = Overage::kFaceEdge;
    } else if (sum > max_dim) {
        overage = Overage::kNewFace;

        const FaceOrientIjk* orient = nullptr;
        if (ijk.k > 0) {
            if (ijk.j > 0) {
                orient = &kFaceNeighbors[fijk.face][kQuadJK];
            } else {
                orient = &kFaceNeighbors[fijk.face][kQuadKI];
                // the pentagon's missing sequence
                if (pent_leading4) {
                    const CoordIjk origin{max_dim, 0, 0};
                    CoordIjk tmp = sub(ijk, origin);
                    rotate60cw(tmp);
                    ijk = add(tmp, origin);
                }
            }
        } else {
            orient = &kFaceNeighbors[fijk.face][kQuadIJ];
        }

        fijk.face = orient->face;
        for (int i = 0; i < orient->ccwRot60; ++i) rotate60ccw(ijk);

        int unit_scale = kUnitScaleByCIIRes[res];
        if (substrate) unit_scale *= 3;
        ijk = add(ijk, scale(orient->translate, unit_scale));
        normalize(ijk);

        if (substrate && ijk.i + ijk.j + ijk.k == max_dim) overage = Overage::kFaceEdge;
    }
    return overage;
}

Overage adjust_pent_vert_overage(FaceIjk& fijk, int res) {
    Overage overage;
    do {
        overage = adjust_overage_class_ii(fijk, res, false, true);
    } while (overage == Overage::kNewFace);
    return overage;
}

// ---------------------------------------------------------------------------
// index <-> face ijk

H3Index rotate60ccw(H3Index h) {
    const int res = get_res(h);
    for (int r = 1; r <= res; ++r) h = set_digit(h, r, rotate_digit_ccw(get_digit(h, r)));
    return h;
}

H3Index rotate60cw(H3Index h) {
    const int res = get_res(h);
    for (int r = 1; r <= res; ++r) h = set_digit(h, r, rotate_digit_cw(get_digit(h, r)));
    return h;
}

H3Index rotate_pent60ccw(H3Index h) {
    bool found_first_nonzero = false;
    const int res = get_res(h);
    for (int r = 1; r <= res; ++r) {
        h = set_digit(h, r, rotate_digit_ccw(get_digit(h, r)));
        // skip over the deleted k-axes sequence
        if (!found_first_nonzero && get_digit(h, r) != 0) {
            found_first_nonzero = true;
            if (leading_nonzero_digit(h) == kK) h = rotate60ccw(h);
        }
    }
    return h;
}

H3Index face_ijk_to_h3(const FaceIjk& fijk, int res) {
    H3Index h = kInitIndex;
    h |= H3Index(kCellMode) << kModeOffset;
    h = set_res(h, res);

    if (res == 0) {
        const CoordIjk& c = fijk.coord;
        if (c.i > kMaxFaceCoord || c.j > kMaxFaceCoord || c.k > kMaxFaceCoord) {
            return kNullIndex;
        }
        return set_base_cell(h, kFaceIjkBaseCells[fijk.face][c.i][c.j][c.k].baseCell);
    }

    // walk up to the base cell, recording digits finest first
    FaceIjk bc_fijk = fijk;
    CoordIjk& ijk = bc_fijk.coord;
    for (int r = res - 1; r >= 0; --r) {
        const CoordIjk last = ijk;
        CoordIjk last_center;
        if (is_class_iii(r + 1)) {
            up_ap7(ijk);
            last_center = ijk;
            down_ap7(last_center);
        } else {
            up_ap7r(ijk);
            last_center = ijk;
            down_ap7r(last_center);
        }
        CoordIjk diff = sub(last, last_center);
        normalize(diff);
        h = set_digit(h, r + 1, unit_ijk_to_digit(diff));
    }

    if (ijk.i > kMaxFaceCoord || ijk.j > kMaxFaceCoord || ijk.k > kMaxFaceCoord) {
        return kNullIndex;
    }

    const BaseCellRotation& bcr = kFaceIjkBaseCells[bc_fijk.face][ijk.i][ijk.j][ijk.k];
    const int bc = bcr.baseCell;
    h = set_base_cell(h, bc);

    if (base_cell_is_pentagon(bc)) {
        // force rotation out of the missing k-axes sub-sequence
        if (leading_nonzero_digit(h) == kK) {
            h = base_cell_is_cw_offset(bc, bc_fijk.face) ? rotate60cw(h) : rotate60ccw(h);
        }
        for (int i = 0; i < bcr.ccwRot60; ++i) h = rotate_pent60ccw(h);
    } else {
        for (int i = 0; i < bcr.ccwRot60; ++i) h = rotate60ccw(h);
    }
    return h;
}

// Returns true when the cell may lie on a face other than the home face.
bool h3_to_face_ijk_from_home(H3Index h, FaceIjk& fijk) {
    const int res = get_res(h);
    bool possible_overage = true;
    if (!base_cell_is_pentagon(get_base_cell(h)) &&
        (res == 0 || (fijk.coord.i == 0 && fijk.coord.j == 0 && fijk.coord.k == 0))) {
        possible_overage = false;
    }
    for (int r = 1; r <= res; ++r) {
        if (is_class_iii(r)) {
            down_ap7(fijk.coord);
        } else {
            down_ap7r(fijk.coord);
        }
        step(fijk.coord, get_digit(h, r));
    }
    return possible_overage;
}

FaceIjk h3_to_face_ijk(H3Index h) {
    const int bc = get_base_cell(h);
    if (bc >= kNumBaseCells) throw std::invalid_argument("invalid base cell");

    // all of sub-sequence 5 of a pentagon needs adjusting
    if (base_cell_is_pentagon(bc) && leading_nonzero_digit(h) == kIK) h = rotate60cw(h);

    FaceIjk fijk = kBaseCellData[bc].homeFijk;
    if (!h3_to_face_ijk_from_home(h, fijk)) return fijk;

    const CoordIjk orig = fijk.coord;
    int res = get_res(h);
    if (is_class_iii(res)) {
        down_ap7r(fijk.coord);
        ++res;
    }

    const bool pent_leading4 = base_cell_is_pentagon(bc) && leading_nonzero_digit(h) == kI;
    if (adjust_overage_class_ii(fijk, res, pent_leading4, false) != Overage::kNone) {
        if (base_cell_is_pentagon(bc)) {
            while (adjust_overage_class_ii(fijk, res, false, false) != Overage::kNone) {
            }
        }
        if (res != get_res(h)) up_ap7r(fijk.coord);
    } else if (res != get_res(h)) {
        fijk.coord = orig;
    }
    return fijk;
}

// ---------------------------------------------------------------------------
// boundaries

// Moves the center into the aperture-33r substrate grid and returns the
// substrate-space vertices; `res` is bumped for Class III.
template <std::size_t N>
std::array<FaceIjk, N> substrate_verts(FaceIjk& center, int& res,
                                       const std::array<CoordIjk, N>& cii,
                                       const std::array<CoordIjk, N>& ciii) {
    const auto& verts = is_class_iii(res) ? ciii : cii;
    down_ap3(center.coord);
    down_ap3r(center.coord);
    if (is_class_iii(res)) {
        down_ap7r(center.coord);
        ++res;
    }
    std::array<FaceIjk, N> out{};
    for (std::size_t v = 0; v < N; ++v) {
        out[v].face = center.face;
        out[v].coord = add(center.coord, verts[v]);
        normalize(out[v].coord);
    }
    return out;
}

constexpr std::array<CoordIjk, kNumHexVerts> kHexVertsCII = {{
    {2, 1, 0}, {1, 2, 0}, {0, 2, 1}, {0, 1, 2}, {1, 0, 2}, {2, 0, 1}}};
constexpr std::array<CoordIjk, kNumHexVerts> kHexVertsCIII = {{
    {5, 4, 0}, {1, 5, 0}, {0, 5, 4}, {0, 1, 5}, {4, 0, 5}, {5, 0, 1}}};
constexpr std::array<CoordIjk, kNumPentVerts> kPentVertsCII = {{
    {2, 1, 0}, {1, 2, 0}, {0, 2, 1}, {0, 1, 2}, {1, 0, 2}}};
constexpr std::array<CoordIjk, kNumPentVerts> kPentVertsCIII = {{
    {5, 4, 0}, {1, 5, 0}, {0, 5, 4}, {0, 1, 5}, {4, 0, 5}}};

std::array<Vec2, 3> icosa_edge_vertices(int adj_res) {
    const double max_dim = kMaxDimByCIIRes[adj_res];
    return {{{3.0 * max_dim, 0.0},
             {-1.5 * max_dim, 3.0 * kSqrt3Over2 * max_dim},
             {-1.5 * max_dim, -3.0 * kSqrt3Over2 * max_dim}}};
}

std::pair<Vec2, Vec2> icosa_edge(int dir, const std::array<Vec2, 3>& v) {
    switch (dir) {
        case kQuadIJ: return {v[0], v[1]};
        case kQuadJK: return {v[1], v[2]};
        default: return {v[2], v[0]};
    }
}

std::vector<LatLngDeg> hex_boundary(const FaceIjk& h, int res) {
    int adj_res = res;
    FaceIjk center = h;
    const auto fverts = substrate_verts(center, adj_res, kHexVertsCII, kHexVertsCIII);

    std::vector<LatLngDeg> out;
    int last_face = -1;
    Overage last_overage = Overage::kNone;
    // one extra iteration catches a distortion vertex on the last edge
    for (int vert = 0; vert < kNumHexVerts + 1; ++vert) {
        const int v = vert % kNumHexVerts;
        FaceIjk fijk = fverts[v];
        const Overage overage = adjust_overage_class_ii(fijk, adj_res, false, true);

        // a Class III edge crossing an icosahedron edge gets an extra vertex
        if (is_class_iii(res) && vert > 0 && fijk.face != last_face &&
            last_overage != Overage::kFaceEdge) {
            const int last_v = (v + 5) % kNumHexVerts;
            const Vec2 orig0 = ijk_to_hex2d(fverts[last_v].coord);
            const Vec2 orig1 = ijk_to_hex2d(fverts[v].coord);
            const int face2 = (last_face == center.face) ? fijk.face : last_face;
            const auto [e0, e1] = icosa_edge(kAdjacentFaceDir[center.face][face2],
                                             icosa_edge_vertices(adj_res));
            const Vec2 inter = v2d_intersect(orig0, orig1, e0, e1);
            if (!v2d_almost_equal(orig0, inter) && !v2d_almost_equal(orig1, inter)) {
                out.push_back(vec3_to_latlng_deg(hex2d_to_vec3(inter, center.face, adj_res, true)));
            }
        }

        if (vert < kNumHexVerts) {
            const Vec2 vec = ijk_to_hex2d(fijk.coord);
            out.push_back(vec3_to_latlng_deg(hex2d_to_vec3(vec, fijk.face, adj_res, true)));
        }
        last_face = fijk.face;
        last_overage = overage;
    }
    return out;
}

std::vector<LatLngDeg> pent_boundary(const FaceIjk& h, int res) {
    int adj_res = res;
    FaceIjk center = h;
    const auto fverts = substrate_verts(center, adj_res, kPentVertsCII, kPentVertsCIII);

    std::vector<LatLngDeg> out;
    FaceIjk last{};
    for (int vert = 0; vert < kNumPentVerts + 1; ++vert) {
        const int v = vert % kNumPentVerts;
        FaceIjk fijk = fverts[v];
        adjust_pent_vert_overage(fijk, adj_res);

        // every Class III pentagon edge crosses an icosahedron edge
        if (is_class_iii(res) && vert > 0) {
            FaceIjk tmp = fijk;
            const Vec2 orig0 = ijk_to_hex2d(last.coord);
            const int current_to_last = kAdjacentFaceDir[tmp.face][last.face];
            const FaceOrientIjk& orient = kFaceNeighbors[tmp.face][current_to_last];
            tmp.face = orient.face;
            for (int i = 0; i < orient.ccwRot60; ++i) rotate60ccw(tmp.coord);
            tmp.coord = add(tmp.coord, scale(orient.translate, kUnitScaleByCIIRes[adj_res] * 3));
            normalize(tmp.coord);
            const Vec2 orig1 = ijk_to_hex2d(tmp.coord);

            const auto [e0, e1] = icosa_edge(kAdjacentFaceDir[tmp.face][fijk.face],
                                             icosa_edge_vertices(adj_res));
            const Vec2 inter = v2d_intersect(orig0, orig1, e0, e1);
            out.push_back(vec3_to_latlng_deg(hex2d_to_vec3(inter, tmp.face, adj_res, true)));
        }

        if (vert < kNumPentVerts) {
            const Vec2 vec = ijk_to_hex2d(fijk.coord);
            out.push_back(vec3_to_latlng_deg(hex2d_to_vec3(vec, fijk.face, adj_res, true)));
        }
        last = fijk;
    }
    return out;
}

// ---------------------------------------------------------------------------
// neighbor traversal

// Returns kNullIndex when `dir` points into a pentagon's deleted sub-sequence.
H3Index neighbor_rotations(H3Index origin, int dir, int& rotations) {
    H3Index current = origin;
    rotations %= 6;
    for (int i = 0; i < rotations; ++i) dir = rotate_digit_ccw(dir);

    int new_rotations = 0;
    const int old_bc = get_base_cell(current);
    const int old_leading = leading_nonzero_digit(current);

    int r = get_res(current) - 1;
    while (true) {
        if (r == -1) {
            current = set_base_cell(current, kBaseCellNeighbors[old_bc][dir]);
            new_rotations = kBaseCellNeighbor60CCWRots[old_bc][dir];
            if (get_base_cell(current) == kInvalidBaseCell) {
                // the deleted k vertex at base cell level borders a different cell
                current = set_base_cell(current, kBaseCellNeighbors[old_bc][kIK]);
                new_rotations = kBaseCellNeighbor60CCWRots[old_bc][kIK];
                current = rotate60ccw(current);
                ++rotations;
            }
            break;
        }
        const int old_digit = get_digit(current, r + 1);
        if (old_digit == kInvalidDigit) return kNullIndex;
        int next_dir;
        if (is_class_iii(r + 1)) {
            current = set_digit(current, r + 1, kNewDigitII[old_digit][dir]);
            next_dir = kNewAdjustmentII[old_digit][dir];
        } else {
            current = set_digit(current, r + 1, kNewDigitIII[old_digit][dir]);
            next_dir = kNewAdjustmentIII[old_digit][dir];
        }
        if (next_dir == kCenter) break;
        dir = next_dir;
        --r;
    }

    const int new_bc = get_base_cell(current);
    if (base_cell_is_pentagon(new_bc)) {
        bool already_adjusted = false;
        if (leading_nonzero_digit(current) == kK) {
            if (old_bc != new_bc) {
                current = base_cell_is_cw_offset(new_bc, kBaseCellData[old_bc].homeFijk.face)
                              ? rotate60cw(current)
                              : rotate60ccw(current);
                already_adjusted = true;
            } else if (old_leading == kCenter) {
                return kNullIndex;
            } else if (old_leading == kJK) {
                current = rotate60ccw(current);
                ++rotations;
            } else if (old_leading == kIK) {
                current = rotate60cw(current);
                rotations += 5;
            } else {
                return kNullIndex;
            }
        }

        for (int i = 0; i < new_rotations; ++i) current = rotate_pent60ccw(current);

        if (old_bc != new_bc) {
            if (base_cell_is_polar_pentagon(new_bc)) {
                if (old_bc != 118 && old_bc != 8 && leading_nonzero_digit(current) != kJK) {
                    ++rotations;
                }
            } else if (leading_nonzero_digit(current) == kIK && !already_adjusted) {
                ++rotations;
            }
        }
    } else {
        for (int i = 0; i < new_rotations; ++i) current = rotate60ccw(current);
    }

    rotations = (rotations + new_rotations) % 6;
    return current;
}

void require_cell(H3Index cell) {
    if (!is_valid_cell(cell)) throw std::invalid_argument("not a valid cell index");
}

}  // namespace

H3Index latlng_to_cell(double lat_deg, double lng_deg, int res) {
    if (res < 0 || res > kMaxResolution) throw std::invalid_argument("resolution must be in [0, 15]");
    if (!std::isfinite(lat_deg) || !std::isfinite(lng_deg)) {
        throw std::invalid_argument("non-finite coordinate");
    }
    const Vec3 v = latlng_to_vec3(lat_deg * kDegToRad, lng_deg * kDegToRad);
    const H3Index h = face_ijk_to_h3(vec3_to_face_ijk(v, res), res);
    if (h == kNullIndex) throw std::invalid_argument("point could not be indexed");
    return h;
}

LatLngDeg cell_to_latlng(H3Index cell) {
    require_cell(cell);
    const FaceIjk fijk = h3_to_face_ijk(cell);
    return vec3_to_latlng_deg(hex2d_to_vec3(ijk_to_hex2d(fijk.coord), fijk.face, get_res(cell), false));
}

std::vector<LatLngDeg> cell_to_boundary(H3Index cell) {
    require_cell(cell);
    const FaceIjk fijk = h3_to_face_ijk(cell);
    return is_pentagon(cell) ? pent_boundary(fijk, get_res(cell))
                             : hex_boundary(fijk, get_res(cell));
}

int resolution(H3Index cell) { return get_res(cell); }
int base_cell(H3Index cell) { return get_base_cell(cell); }

bool is_pentagon(H3Index cell) {
    return base_cell_is_pentagon(get_base_cell(cell)) && leading_nonzero_digit(cell) == kCenter;
}

bool is_valid_cell(H3Index h) {
    if ((h >> 63) != 0) return false;
    if (static_cast<int>((h >> kModeOffset) & 15U) != kCellMode) return false;
    if (((h >> 56) & 7U) != 0) return false;
    const int bc = get_base_cell(h);
    if (bc >= kNumBaseCells) return false;
    const int res = get_res(h);
    bool seen_nonzero = false;
    for (int r = 1; r <= kMaxResolution; ++r) {
        const int d = get_digit(h, r);
        if (r <= res) {
            if (d == kInvalidDigit) return false;
            if (!seen_nonzero && d != kCenter) {
                seen_nonzero = true;
                if (base_cell_is_pentagon(bc) && d == kK) return false;
            }
        } else if (d != kInvalidDigit) {
            return false;
        }
    }
    return true;
}

H3Index cell_to_parent(H3Index cell, int parent_res) {
    const int res = get_res(cell);
    if (parent_res < 0 || parent_res > res) throw std::invalid_argument("parent resolution out of range");
    H3Index p = set_res(cell, parent_res);
    for (int r = parent_res + 1; r <= res; ++r) p = set_digit(p, r, kInvalidDigit);
    return p;
}

std::vector<H3Index> cell_to_children(H3Index cell, int child_res) {
    const int res = get_res(cell);
    if (child_res < res || child_res > kMaxResolution) {
        throw std::invalid_argument("child resolution out of range");
    }
    std::vector<H3Index> level{cell};
    for (int r = res + 1; r <= child_res; ++r) {
        std::vector<H3Index> next;
        next.reserve(level.size() * 7);
        for (H3Index h : level) {
            const bool pent = is_pentagon(h);
            for (int d = kCenter; d < kInvalidDigit; ++d) {
                if (pent && d == kK) continue;
                next.push_back(set_digit(set_res(h, r), r, d));
            }
        }
        level = std::move(next);
    }
    return level;
}

std::vector<H3Index> neighbors(H3Index cell) {
    require_cell(cell);
    std::vector<H3Index> out;
    for (int dir : {kJ, kJK, kK, kIK, kI, kIJ}) {
        int rotations = 0;
        const H3Index n = neighbor_rotations(cell, dir, rotations);
        if (n != kNullIndex && n != cell) out.push_back(n);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool are_neighbors(H3Index a, H3Index b) {
    if (a == b || get_res(a) != get_res(b)) return false;
    const auto n = neighbors(a);
    return std::binary_search(n.begin(), n.end(), b);
}

std::string to_string(H3Index cell) {
    char buf[17];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, cell, 16);
    return std::string(buf, end);
}

H3Index from_string(std::string_view text) {
    H3Index h = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), h, 16);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw std::invalid_argument("malformed cell address '" + std::string(text) + "'");
    }
    if (!is_valid_cell(h)) {
        throw std::invalid_argument("not a valid cell address '" + std::string(text) + "'");
    }
    return h;
}

}  // namespace hexembed::h3
