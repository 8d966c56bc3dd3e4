#include "jkraim/model.hpp"

#include <set>

namespace jkraim {

Geometry assemble_geometry(const Eigen::Vector3d& user_ecef, const std::vector<SatelliteState>& sats,
                           double mask_deg)
{
    double lat, lon;
    ecef_to_llh(user_ecef, lat, lon);
    const Eigen::Matrix3d R = ecef_to_enu_rotation(lat, lon);

    std::vector<Eigen::Vector3d> los;
    Geometry g;
    std::set<int> present;
    for (size_t s = 0; s < sats.size(); ++s) {
        Eigen::Vector3d d = sats[s].ecef - user_ecef;
        Eigen::Vector3d e = R * d.normalized();
        const double el = std::asin(std::clamp(e.z(), -1.0, 1.0)) * 180.0 / M_PI;
        if (el < mask_deg) continue;
        los.push_back(e);
        g.elevation_deg.push_back(el);
        g.source_index.push_back(static_cast<int>(s));
        present.insert(static_cast<int>(sats[s].constellation));
    }
    for (int c : present) g.clocks.push_back(static_cast<Constellation>(c));

    const Eigen::Index n = static_cast<Eigen::Index>(los.size());
    const Eigen::Index m = 3 + static_cast<Eigen::Index>(g.clocks.size());
    if (n < m || g.clocks.empty()) throw InsufficientGeometry("not enough satellites above the mask");

    MatX<double> G = MatX<double>::Zero(n, m);
    std::vector<std::string> ids;
    std::vector<int> tags;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& sat = sats[g.source_index[i]];
        // +LOS convention: a zenith satellite gives (0, 0, 1, 1)
        G.block(i, 0, 1, 3) = los[i].transpose();
        for (size_t c = 0; c < g.clocks.size(); ++c)
            if (g.clocks[c] == sat.constellation) G(i, 3 + c) = 1.0;
        ids.push_back(sat.id);
        tags.push_back(static_cast<int>(sat.constellation));
    }
    g.model = make_model<double>(std::move(G), VecX<double>::Ones(n), VecX<double>(), std::move(ids),
                                 std::move(tags));
    return g;
}

} // namespace jkraim
