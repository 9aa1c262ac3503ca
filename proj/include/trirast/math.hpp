#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace trirast {

template <typename T>
struct Vec2T {
    T x{}, y{};

    constexpr Vec2T operator+(const Vec2T& o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2T operator-(const Vec2T& o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2T operator*(T s) const { return {x * s, y * s}; }
    constexpr bool operator==(const Vec2T&) const = default;

    template <typename U>
    constexpr Vec2T<U> as() const { return {static_cast<U>(x), static_cast<U>(y)}; }
};

template <typename T>
struct Vec3T {
    T x{}, y{}, z{};

    constexpr Vec3T operator+(const Vec3T& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3T operator-(const Vec3T& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3T operator*(T s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3T operator-() const { return {-x, -y, -z}; }
    constexpr T& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr const T& operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr bool operator==(const Vec3T&) const = default;

    template <typename U>
    constexpr Vec3T<U> as() const { return {static_cast<U>(x), static_cast<U>(y), static_cast<U>(z)}; }
};

using Vec2 = Vec2T<float>;
using Vec3 = Vec3T<float>;
using Vec2d = Vec2T<double>;
using Vec3d = Vec3T<double>;

template <typename T>
constexpr T dot(const Vec3T<T>& a, const Vec3T<T>& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

template <typename T>
constexpr Vec3T<T> cross(const Vec3T<T>& a, const Vec3T<T>& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

template <typename T>
constexpr Vec3T<T> mul(const Vec3T<T>& a, const Vec3T<T>& b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }

template <typename T>
T length(const Vec3T<T>& a) { return std::sqrt(dot(a, a)); }

template <typename T>
Vec3T<T> normalize(const Vec3T<T>& a) {
    T len = length(a);
    return len > T(0) ? a * (T(1) / len) : a;
}

inline Vec3 min(const Vec3& a, const Vec3& b) { return {std::fmin(a.x, b.x), std::fmin(a.y, b.y), std::fmin(a.z, b.z)}; }
inline Vec3 max(const Vec3& a, const Vec3& b) { return {std::fmax(a.x, b.x), std::fmax(a.y, b.y), std::fmax(a.z, b.z)}; }

/// Row-major 4x4 matrix acting on column vectors (p' = M * p).
struct Mat4 {
    std::array<float, 16> m{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

    constexpr float operator()(int row, int col) const { return m[row * 4 + col]; }
    constexpr float& operator()(int row, int col) { return m[row * 4 + col]; }
    constexpr bool operator==(const Mat4&) const = default;

    static constexpr Mat4 identity() { return {}; }
    static Mat4 translation(const Vec3& t);
    static Mat4 scaling(const Vec3& s);
    /// Rotation about a unit axis by `radians`.
    static Mat4 rotation(const Vec3& axis, float radians);
    /// World-to-view transform for a camera at `eye` looking at `target` (view space looks down -z, y up).
    static Mat4 lookAt(const Vec3& eye, const Vec3& target, const Vec3& up);

    Mat4 operator*(const Mat4& o) const;

    Vec3 transformPoint(const Vec3& p) const {
        return {m[0] * p.x + m[1] * p.y + m[2] * p.z + m[3],
                m[4] * p.x + m[5] * p.y + m[6] * p.z + m[7],
                m[8] * p.x + m[9] * p.y + m[10] * p.z + m[11]};
    }
    Vec3 transformVector(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[4] * v.x + m[5] * v.y + m[6] * v.z,
                m[8] * v.x + m[9] * v.y + m[10] * v.z};
    }

    bool isAffine() const { return m[12] == 0.0f && m[13] == 0.0f && m[14] == 0.0f && m[15] == 1.0f; }
    /// Determinant of the upper-left 3x3 block.
    double linearDeterminant() const;
    /// Inverse of an affine matrix. Undefined for singular input.
    Mat4 affineInverse() const;
};

struct Aabb {
    Vec3 min{INFINITY, INFINITY, INFINITY};
    Vec3 max{-INFINITY, -INFINITY, -INFINITY};

    bool empty() const { return min.x > max.x || min.y > max.y || min.z > max.z; }
    void extend(const Vec3& p) {
        min = trirast::min(min, p);
        max = trirast::max(max, p);
    }
    bool contains(const Vec3& p) const {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z && p.z <= max.z;
    }
    Vec3 size() const { return max - min; }
    Vec3 center() const { return (min + max) * 0.5f; }
    std::array<Vec3, 8> corners() const;
    /// Enclosing box of the eight transformed corners.
    Aabb transformed(const Mat4& t) const;
    bool operator==(const Aabb&) const = default;
};

}  // namespace trirast
