#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jkraim/errors.hpp"

namespace jkraim {

template <typename Scalar> using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar> using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar> using RowX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using IndexSet = std::vector<int>;

enum class Constellation : int { GPS = 0, GAL = 1 };

// state index treated as vertical; scalar toy models (m < 3) use state 0
inline int vertical_axis(Eigen::Index m) { return m >= 3 ? 2 : 0; }

inline const char* to_string(Constellation c) { return c == Constellation::GAL ? "GAL" : "GPS"; }

// Relative pivot threshold used by every rank decision in the library.
inline constexpr double kRankTol = 1e-8;

// State order: east, north, up, then one clock per constellation present.
// Generic models (toy cases, m < 4) are allowed; the clock invariant is only
// checked when const_of is filled in.
template <typename Scalar = double>
struct LinearModel {
    MatX<Scalar> G;
    VecX<Scalar> W;
    VecX<Scalar> y;
    std::vector<std::string> sat_ids;
    std::vector<int> const_of;

    Eigen::Index n() const { return G.rows(); }
    Eigen::Index m() const { return G.cols(); }
    int n_clock() const { return static_cast<int>(std::max<Eigen::Index>(0, G.cols() - 3)); }
};

namespace detail {

template <typename Scalar>
MatX<Scalar> weighted_pinv(const MatX<Scalar>& G, const VecX<Scalar>& W)
{
    VecX<Scalar> sw = W.cwiseMax(Scalar(0)).cwiseSqrt();
    MatX<Scalar> A = sw.asDiagonal() * G;
    Eigen::ColPivHouseholderQR<MatX<Scalar>> qr(A);
    qr.setThreshold(Scalar(kRankTol));
    if (qr.rank() < G.cols()) return MatX<Scalar>();
    MatX<Scalar> B = sw.asDiagonal().toDenseMatrix();
    return qr.solve(B);
}

} // namespace detail

// S = (G^T W G)^-1 G^T W through a column-pivoted QR of sqrt(W) G.
template <typename Scalar>
MatX<Scalar> solution_matrix(const MatX<Scalar>& G, const VecX<Scalar>& W)
{
    MatX<Scalar> S = detail::weighted_pinv(G, W);
    if (S.size() == 0) throw SingularNormalMatrix("normal matrix is rank deficient");
    return S;
}

template <typename Scalar>
LinearModel<Scalar> make_model(MatX<Scalar> G, VecX<Scalar> W, VecX<Scalar> y = {},
                               std::vector<std::string> ids = {}, std::vector<int> const_of = {})
{
    const Eigen::Index n = G.rows(), m = G.cols();
    if (n < m || m == 0) throw InsufficientGeometry("fewer measurements than states");
    if (W.size() != n) throw Error("weight vector size mismatch");
    if ((W.array() <= 0).any()) throw Error("weights must be positive");
    if (y.size() == 0) y = VecX<Scalar>::Zero(n);
    if (y.size() != n) throw Error("observation vector size mismatch");
    if (!const_of.empty()) {
        if (static_cast<Eigen::Index>(const_of.size()) != n) throw Error("constellation tag size mismatch");
        for (Eigen::Index i = 0; i < n; ++i) {
            int ones = 0;
            for (Eigen::Index c = 3; c < m; ++c) {
                if (G(i, c) == Scalar(1)) ++ones;
                else if (G(i, c) != Scalar(0)) throw Error("clock column entries must be 0 or 1");
            }
            if (ones != 1) throw Error("each row needs exactly one clock indicator");
        }
    }
    if (detail::weighted_pinv(G, W).size() == 0) throw InsufficientGeometry("geometry is rank deficient");
    if (ids.empty())
        for (Eigen::Index i = 0; i < n; ++i) ids.push_back(std::to_string(i + 1));
    return LinearModel<Scalar>{std::move(G), std::move(W), std::move(y), std::move(ids), std::move(const_of)};
}

template <typename Scalar>
struct WlsSolution {
    VecX<Scalar> state;
    MatX<Scalar> S;
};

template <typename Scalar>
WlsSolution<Scalar> wls_solve(const LinearModel<Scalar>& model)
{
    MatX<Scalar> S = solution_matrix(model.G, model.W);
    VecX<Scalar> x = S * model.y;
    return {x, S};
}

template <typename Scalar>
struct SubsetOps {
    MatX<Scalar> S;                 // m x n, zero columns at excluded rows
    MatX<Scalar> P;                 // n x n, G * S
    std::vector<int> dropped;       // state columns removed (clock of an emptied constellation)
};

template <typename Scalar>
VecX<Scalar> subset_weights(const VecX<Scalar>& W, const IndexSet& excluded)
{
    VecX<Scalar> Wk = W;
    for (int i : excluded) Wk(i) = Scalar(0);
    return Wk;
}

// With drop_empty_clocks, clock states with no remaining measurement are
// removed before solving (the reduced-state subset used for constellation
// exclusion); their rows of S are zero.
template <typename Scalar>
SubsetOps<Scalar> subset_ops(const LinearModel<Scalar>& model, const IndexSet& excluded,
                             bool drop_empty_clocks = false)
{
    const Eigen::Index n = model.n(), m = model.m();
    VecX<Scalar> Wk = subset_weights(model.W, excluded);
    std::vector<int> keep, dropped;
    for (Eigen::Index c = 0; c < m; ++c) {
        bool empty = false;
        if (drop_empty_clocks && c >= 3) {
            empty = true;
            for (Eigen::Index i = 0; i < n; ++i)
                if (Wk(i) > 0 && model.G(i, c) != Scalar(0)) { empty = false; break; }
        }
        (empty ? dropped : keep).push_back(static_cast<int>(c));
    }
    MatX<Scalar> Gr(n, static_cast<Eigen::Index>(keep.size()));
    for (size_t j = 0; j < keep.size(); ++j) Gr.col(j) = model.G.col(keep[j]);
    MatX<Scalar> Sr = detail::weighted_pinv(Gr, Wk);
    if (Sr.size() == 0) throw SubsetRankDeficient("subset geometry is rank deficient");
    SubsetOps<Scalar> out;
    out.S = MatX<Scalar>::Zero(m, n);
    for (size_t j = 0; j < keep.size(); ++j) out.S.row(keep[j]) = Sr.row(j);
    for (int i : excluded) out.S.col(i).setZero();
    out.P = model.G * out.S;
    out.dropped = std::move(dropped);
    return out;
}

// q^(k) = s_v E^(k) + sum_{j in idx} S_vj g_j S^(k)
template <typename Scalar>
RowX<Scalar> q_vector(const LinearModel<Scalar>& model, const MatX<Scalar>& S, const MatX<Scalar>& Sk,
                      const IndexSet& excluded, int v)
{
    RowX<Scalar> q = S.row(v);
    for (int j : excluded) q(j) = Scalar(0);
    for (int j : excluded) q += S(v, j) * (model.G.row(j) * Sk);
    return q;
}

// b_v = sum_i |row_i| b_nom,i
template <typename Derived, typename OtherDerived>
typename Derived::Scalar bias_projection(const Eigen::MatrixBase<Derived>& row,
                                         const Eigen::MatrixBase<OtherDerived>& b_nom)
{
    return row.cwiseAbs().dot(b_nom.transpose().template cast<typename Derived::Scalar>());
}

template <typename Derived>
typename Derived::Scalar bias_projection(const Eigen::MatrixBase<Derived>& row, double b_nom)
{
    return row.cwiseAbs().sum() * typename Derived::Scalar(b_nom);
}

// --- geometry assembly --------------------------------------------------

// WGS84
inline constexpr double kWgsA = 6378137.0;
inline constexpr double kWgsF = 1.0 / 298.257223563;

inline Eigen::Vector3d llh_to_ecef(double lat_deg, double lon_deg, double h = 0.0)
{
    const double lat = lat_deg * M_PI / 180.0, lon = lon_deg * M_PI / 180.0;
    const double e2 = kWgsF * (2.0 - kWgsF);
    const double N = kWgsA / std::sqrt(1.0 - e2 * std::sin(lat) * std::sin(lat));
    return {(N + h) * std::cos(lat) * std::cos(lon), (N + h) * std::cos(lat) * std::sin(lon),
            (N * (1.0 - e2) + h) * std::sin(lat)};
}

inline void ecef_to_llh(const Eigen::Vector3d& p, double& lat_deg, double& lon_deg)
{
    const double e2 = kWgsF * (2.0 - kWgsF);
    const double r = std::hypot(p.x(), p.y());
    double lat = std::atan2(p.z(), r * (1.0 - e2));
    for (int it = 0; it < 8; ++it) {
        const double N = kWgsA / std::sqrt(1.0 - e2 * std::sin(lat) * std::sin(lat));
        lat = std::atan2(p.z() + e2 * N * std::sin(lat), r);
    }
    lat_deg = lat * 180.0 / M_PI;
    lon_deg = std::atan2(p.y(), p.x()) * 180.0 / M_PI;
}

// rows: east, north, up
inline Eigen::Matrix3d ecef_to_enu_rotation(double lat_deg, double lon_deg)
{
    const double la = lat_deg * M_PI / 180.0, lo = lon_deg * M_PI / 180.0;
    Eigen::Matrix3d R;
    R << -std::sin(lo), std::cos(lo), 0.0,
         -std::sin(la) * std::cos(lo), -std::sin(la) * std::sin(lo), std::cos(la),
          std::cos(la) * std::cos(lo), std::cos(la) * std::sin(lo), std::sin(la);
    return R;
}

struct SatelliteState {
    Eigen::Vector3d ecef;
    Constellation constellation = Constellation::GPS;
    std::string id;
};

struct Geometry {
    LinearModel<double> model;
    std::vector<double> elevation_deg;
    std::vector<int> source_index;       // index into the input satellite list
    std::vector<Constellation> clocks;   // constellation of each clock column
};

// Unit-weight model; callers set W from their error model.
Geometry assemble_geometry(const Eigen::Vector3d& user_ecef, const std::vector<SatelliteState>& sats,
                           double mask_deg);

} // namespace jkraim
