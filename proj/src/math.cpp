#include "trirast/math.hpp"

namespace trirast {

Mat4 Mat4::translation(const Vec3& t) {
    Mat4 r;
    r(0, 3) = t.x;
    r(1, 3) = t.y;
    r(2, 3) = t.z;
    return r;
}

Mat4 Mat4::scaling(const Vec3& s) {
    Mat4 r;
    r(0, 0) = s.x;
    r(1, 1) = s.y;
    r(2, 2) = s.z;
    return r;
}

Mat4 Mat4::rotation(const Vec3& axis, float radians) {
    Vec3d a = normalize(axis.as<double>());
    double c = std::cos(double(radians)), s = std::sin(double(radians)), k = 1.0 - c;
    Mat4 r;
    r(0, 0) = float(c + a.x * a.x * k);
    r(0, 1) = float(a.x * a.y * k - a.z * s);
    r(0, 2) = float(a.x * a.z * k + a.y * s);
    r(1, 0) = float(a.y * a.x * k + a.z * s);
    r(1, 1) = float(c + a.y * a.y * k);
    r(1, 2) = float(a.y * a.z * k - a.x * s);
    r(2, 0) = float(a.z * a.x * k - a.y * s);
    r(2, 1) = float(a.z * a.y * k + a.x * s);
    r(2, 2) = float(c + a.z * a.z * k);
    return r;
}

Mat4 Mat4::lookAt(const Vec3& eye, const Vec3& target, const Vec3& up) {
    Vec3d e = eye.as<double>();
    Vec3d forward = normalize(target.as<double>() - e);
    Vec3d right = normalize(cross(forward, up.as<double>()));
    Vec3d trueUp = cross(right, forward);
    Mat4 r;
    const Vec3d rows[3] = {right, trueUp, -forward};
    for (int i = 0; i < 3; ++i) {
        r(i, 0) = float(rows[i].x);
        r(i, 1) = float(rows[i].y);
        r(i, 2) = float(rows[i].z);
        r(i, 3) = float(-dot(rows[i], e));
    }
    return r;
}

Mat4 Mat4::operator*(const Mat4& o) const {
    Mat4 r;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) acc += double((*this)(i, k)) * double(o(k, j));
            r(i, j) = float(acc);
        }
    }
    return r;
}

double Mat4::linearDeterminant() const {
    const Mat4& a = *this;
    return double(a(0, 0)) * (double(a(1, 1)) * a(2, 2) - double(a(1, 2)) * a(2, 1)) -
           double(a(0, 1)) * (double(a(1, 0)) * a(2, 2) - double(a(1, 2)) * a(2, 0)) +
           double(a(0, 2)) * (double(a(1, 0)) * a(2, 1) - double(a(1, 1)) * a(2, 0));
}

Mat4 Mat4::affineInverse() const {
    const Mat4& a = *this;
    double inv = 1.0 / linearDeterminant();
    double c[3][3];
    c[0][0] = (double(a(1, 1)) * a(2, 2) - double(a(1, 2)) * a(2, 1)) * inv;
    c[0][1] = (double(a(0, 2)) * a(2, 1) - double(a(0, 1)) * a(2, 2)) * inv;
    c[0][2] = (double(a(0, 1)) * a(1, 2) - double(a(0, 2)) * a(1, 1)) * inv;
    c[1][0] = (double(a(1, 2)) * a(2, 0) - double(a(1, 0)) * a(2, 2)) * inv;
    c[1][1] = (double(a(0, 0)) * a(2, 2) - double(a(0, 2)) * a(2, 0)) * inv;
    c[1][2] = (double(a(0, 2)) * a(1, 0) - double(a(0, 0)) * a(1, 2)) * inv;
    c[2][0] = (double(a(1, 0)) * a(2, 1) - double(a(1, 1)) * a(2, 0)) * inv;
    c[2][1] = (double(a(0, 1)) * a(2, 0) - double(a(0, 0)) * a(2, 1)) * inv;
    c[2][2] = (double(a(0, 0)) * a(1, 1) - double(a(0, 1)) * a(1, 0)) * inv;
    Mat4 r;
    for (int i = 0; i < 3; ++i) {
        double t = 0.0;
        for (int j = 0; j < 3; ++j) {
            r(i, j) = float(c[i][j]);
            t += c[i][j] * a(j, 3);
        }
        r(i, 3) = float(-t);
    }
    return r;
}

std::array<Vec3, 8> Aabb::corners() const {
    std::array<Vec3, 8> out;
    for (int i = 0; i < 8; ++i) {
        out[i] = {(i & 1) ? max.x : min.x, (i & 2) ? max.y : min.y, (i & 4) ? max.z : min.z};
    }
    return out;
}

Aabb Aabb::transformed(const Mat4& t) const {
    Aabb out;
    if (empty()) return out;
    for (const Vec3& c : corners()) out.extend(t.transformPoint(c));
    return out;
}

}  // namespace trirast
