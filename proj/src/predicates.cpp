#include "mattopo/predicates.h"

#include <algorithm>
#include <atomic>
#include <cmath>

#include <boost/multiprecision/cpp_int.hpp>

namespace mattopo {

namespace {

using Exact = boost::multiprecision::cpp_rational;

std::atomic<std::uint64_t> g_orient_exact{0};
std::atomic<std::uint64_t> g_power_exact{0};
std::atomic<std::uint64_t> g_power_sos{0};

constexpr double kOrientRel = 1e-13;
constexpr double kPowerRel = 1e-12;

template <class T>
T det3(const T m[3][3]) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

template <class T>
T det4(const T m[4][4]) {
  T result = T(0);
  for (int col = 0; col < 4; ++col) {
    T minor[3][3];
    for (int r = 1; r < 4; ++r) {
      int cc = 0;
      for (int c = 0; c < 4; ++c)
        if (c != col) minor[r - 1][cc++] = m[r][c];
    }
    const T term = m[0][col] * det3(minor);
    if (col % 2 == 0) {
      result += term;
    } else {
      result -= term;
    }
  }
  return result;
}

template <int N>
double permanent(const double m[N][N]) {
  if constexpr (N == 1) {
    return m[0][0];
  } else {
    double s = 0.0;
    for (int col = 0; col < N; ++col) {
      double minor[N - 1][N - 1];
      for (int r = 1; r < N; ++r) {
        int cc = 0;
        for (int c = 0; c < N; ++c)
          if (c != col) minor[r - 1][cc++] = m[r][c];
      }
      s += m[0][col] * permanent<N - 1>(minor);
    }
    return s;
  }
}

int sign_of(const Exact& v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

int orient_exact(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  Exact m[3][3];
  const Vec3* rows[3] = {&b, &c, &d};
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 3; ++k) m[r][k] = Exact((*rows[r])[k]) - Exact(a[k]);
  return sign_of(det3(m));
}

Exact lifted_exact(const WeightedPoint& w) {
  Exact h = -Exact(w.weight);
  for (int k = 0; k < 3; ++k) h += Exact(w.p[k]) * Exact(w.p[k]);
  return h;
}

}  // namespace

int orient3d(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  double m[3][3], mag[3][3];
  const Vec3* rows[3] = {&b, &c, &d};
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 3; ++k) {
      m[r][k] = (*rows[r])[k] - a[k];
      mag[r][k] = std::abs((*rows[r])[k]) + std::abs(a[k]);
    }
  const double det = det3(m);
  const double bound = kOrientRel * permanent<3>(mag);
  if (det > bound) return 1;
  if (det < -bound) return -1;
  ++g_orient_exact;
  return orient_exact(a, b, c, d);
}

int power_test_raw(const WeightedPoint& a, const WeightedPoint& b, const WeightedPoint& c,
                   const WeightedPoint& d, const WeightedPoint& p) {
  // det of the 5x5 lifted matrix [x y z h 1] equals the 4x4 determinant of
  // the rows translated by p.
  const WeightedPoint* rows[4] = {&a, &b, &c, &d};
  const double hp = p.p.squaredNorm() - p.weight;
  double m[4][4], mag[4][4];
  for (int r = 0; r < 4; ++r) {
    const WeightedPoint& w = *rows[r];
    for (int k = 0; k < 3; ++k) {
      m[r][k] = w.p[k] - p.p[k];
      mag[r][k] = std::abs(w.p[k]) + std::abs(p.p[k]);
    }
    const double h = w.p.squaredNorm() - w.weight;
    m[r][3] = h - hp;
    mag[r][3] = w.p.squaredNorm() + std::abs(w.weight) + p.p.squaredNorm() + std::abs(p.weight);
  }
  const double det = det4(m);
  const double bound = kPowerRel * permanent<4>(mag);
  if (det > bound) return 1;
  if (det < -bound) return -1;
  ++g_power_exact;
  const Exact ehp = lifted_exact(p);
  Exact em[4][4];
  for (int r = 0; r < 4; ++r) {
    for (int k = 0; k < 3; ++k) em[r][k] = Exact(rows[r]->p[k]) - Exact(p.p[k]);
    em[r][3] = lifted_exact(*rows[r]) - ehp;
  }
  return sign_of(det4(em));
}

bool power_conflict(const WeightedPoint& a, const WeightedPoint& b, const WeightedPoint& c,
                    const WeightedPoint& d, const WeightedPoint& p) {
  // With rows (a, b, c, d, p) the lifted determinant D is linear in each
  // height; p conflicts iff sign(D) == -orient(a, b, c, d) (a heavy p hides
  // everything). Raising weight k by eps_k changes D by -eps_k * C_k with
  // cofactors C_a = O(b,c,d,p), C_b = -O(a,c,d,p), C_c = O(a,b,d,p),
  // C_d = -O(a,b,c,p), C_p = O(a,b,c,d).
  const int o = orient3d(a.p, b.p, c.p, d.p);
  int s = power_test_raw(a, b, c, d, p);
  if (s == 0) {
    ++g_power_sos;
    struct Term {
      Index id;
      int which;
    };
    std::array<Term, 5> order = {{{a.id, 0}, {b.id, 1}, {c.id, 2}, {d.id, 3}, {p.id, 4}}};
    std::sort(order.begin(), order.end(), [](const Term& x, const Term& y) { return x.id < y.id; });
    for (const Term& t : order) {
      int cof = 0;
      switch (t.which) {
        case 0: cof = orient3d(b.p, c.p, d.p, p.p); break;
        case 1: cof = -orient3d(a.p, c.p, d.p, p.p); break;
        case 2: cof = orient3d(a.p, b.p, d.p, p.p); break;
        case 3: cof = -orient3d(a.p, b.p, c.p, p.p); break;
        default: cof = o; break;
      }
      if (cof != 0) {
        s = -cof;
        break;
      }
    }
  }
  return s != 0 && s == -o;
}

PredicateStats predicate_stats() {
  PredicateStats st;
  st.orient_exact = g_orient_exact.load();
  st.power_exact = g_power_exact.load();
  st.power_sos = g_power_sos.load();
  return st;
}

}  // namespace mattopo
