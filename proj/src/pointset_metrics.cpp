#include "pcq/pointset_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "pcq/errors.hpp"
#include "pcq/kd_tree.hpp"
#include "pcq/parallel.hpp"

namespace pcq {

namespace {

// Quadric height field z' = a x'^2 + b x'y' + c y'^2 + d x' + e y' + f in a
// frame whose axes are the neighborhood covariance eigenvectors. The normal
// at the query point (local origin) is (-d, -e, 1) rotated back.
bool quadric_normal(const std::vector<Point>& neighbors, const Point& query, Vec3& normal_out) {
    const std::size_t n = neighbors.size();
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const Point& p : neighbors) {
        centroid += Eigen::Vector3d(p.x, p.y, p.z);
    }
    centroid /= static_cast<double>(n);

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const Point& p : neighbors) {
        const Eigen::Vector3d d = Eigen::Vector3d(p.x, p.y, p.z) - centroid;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    if (eig.info() != Eigen::Success) {
        return false;
    }
    // Eigenvalues ascending: column 0 is the plane normal, columns 2/1 span it.
    const Eigen::Matrix3d axes = eig.eigenvectors();
    const Eigen::Vector3d u = axes.col(2);
    const Eigen::Vector3d v = axes.col(1);
    const Eigen::Vector3d w = axes.col(0);

    const Eigen::Vector3d q(query.x, query.y, query.z);
    Eigen::MatrixXd design(n, 6);
    Eigen::VectorXd height(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d d = Eigen::Vector3d(neighbors[i].x, neighbors[i].y,
                                                  neighbors[i].z) -
                                  q;
        const double x = d.dot(u);
        const double y = d.dot(v);
        design(static_cast<Eigen::Index>(i), 0) = x * x;
        design(static_cast<Eigen::Index>(i), 1) = x * y;
        design(static_cast<Eigen::Index>(i), 2) = y * y;
        design(static_cast<Eigen::Index>(i), 3) = x;
        design(static_cast<Eigen::Index>(i), 4) = y;
        design(static_cast<Eigen::Index>(i), 5) = 1.0;
        height(static_cast<Eigen::Index>(i)) = d.dot(w);
    }

    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < 6) {
        return false;
    }
    const Eigen::VectorXd coeff = qr.solve(height);
    const Eigen::Vector3d local(-coeff(3), -coeff(4), 1.0);
    const Eigen::Vector3d world = local.x() * u + local.y() * v + local.z() * w;
    const double norm = world.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        return false;
    }
    normal_out = {world.x() / norm, world.y() / norm, world.z() / norm};
    return true;
}

Vec3 covariance_plane_normal(const std::vector<Point>& neighbors) {
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const Point& p : neighbors) {
        centroid += Eigen::Vector3d(p.x, p.y, p.z);
    }
    centroid /= static_cast<double>(neighbors.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const Point& p : neighbors) {
        const Eigen::Vector3d d = Eigen::Vector3d(p.x, p.y, p.z) - centroid;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const Eigen::Vector3d n = eig.eigenvectors().col(0).normalized();
    return {n.x(), n.y(), n.z()};
}

}  // namespace

PointCloud estimate_normals(const PointCloud& cloud, int k, std::vector<bool>* plane_fallback) {
    if (k < 3) {
        throw InvalidArgument("normal estimation needs k >= 3 neighbors");
    }
    if (cloud.size() < static_cast<std::size_t>(k)) {
        throw InvalidArgument("normal estimation needs at least k points");
    }

    const KdTree index(cloud);
    PointCloud result;
    result.points = cloud.points;
    result.bit_depth = cloud.bit_depth;
    result.normals.resize(cloud.size());
    if (plane_fallback != nullptr) {
        plane_fallback->assign(cloud.size(), false);
    }

    parallel_for(static_cast<std::int64_t>(cloud.size()), [&](std::int64_t i0, std::int64_t i1) {
        std::vector<Point> neighbors(static_cast<std::size_t>(k));
        for (std::int64_t i = i0; i < i1; ++i) {
            const Point& query = cloud.points[static_cast<std::size_t>(i)];
            const auto nn = index.nearest_neighbors(query, static_cast<std::size_t>(k));
            Vec3 centroid{0.0, 0.0, 0.0};
            for (std::size_t j = 0; j < nn.size(); ++j) {
                neighbors[j] = cloud.points[nn[j].index];
                centroid += neighbors[j];
            }
            centroid = centroid * (1.0 / static_cast<double>(k));

            Vec3 normal;
            if (!quadric_normal(neighbors, query, normal)) {
                normal = covariance_plane_normal(neighbors);
                if (plane_fallback != nullptr) {
                    (*plane_fallback)[static_cast<std::size_t>(i)] = true;
                }
            }
            if (normal.dot(query - centroid) < 0.0) {
                normal = normal * -1.0;
            }
            result.normals[static_cast<std::size_t>(i)] = normal;
        }
    });
    return result;
}

namespace {

double directed_d1(const PointCloud& from, const KdTree& to_index) {
    double total = 0.0;
    for (const Point& p : from.points) {
        total += to_index.nearest(p).squared_distance;
    }
    return total / static_cast<double>(from.size());
}

double directed_d2(const PointCloud& from, const PointCloud& to, const KdTree& to_index) {
    double total = 0.0;
    for (std::size_t i = 0; i < from.size(); ++i) {
        const Neighbor nn = to_index.nearest(from.points[i]);
        const double proj = (from.points[i] - to.points[nn.index]).dot(from.normals[i]);
        total += proj * proj;
    }
    return total / static_cast<double>(from.size());
}

void check_non_empty(const PointCloud& a, const PointCloud& b) {
    if (a.empty() || b.empty()) {
        throw EmptyInput("point-set metrics require non-empty clouds");
    }
}

}  // namespace

double d1_mse(const PointCloud& a, const PointCloud& b) {
    check_non_empty(a, b);
    const KdTree index_a(a);
    const KdTree index_b(b);
    return std::max(directed_d1(a, index_b), directed_d1(b, index_a));
}

double d2_mse(const PointCloud& a, const PointCloud& b) {
    check_non_empty(a, b);
    if (!a.has_normals() || !b.has_normals()) {
        throw InvalidArgument("d2_mse requires normals on both clouds");
    }
    const KdTree index_a(a);
    const KdTree index_b(b);
    return std::max(directed_d2(a, b, index_b), directed_d2(b, a, index_a));
}

double geometry_psnr(double mse, const PsnrConfig& cfg) {
    if (!(cfg.resolution > 0.0)) {
        throw InvalidArgument("PSNR resolution must be positive");
    }
    if (mse < 0.0) {
        throw InvalidArgument("mse must be non-negative");
    }
    if (mse == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    const double peak = 3.0 * cfg.resolution;
    return 10.0 * std::log10(peak * peak / mse);
}

double default_resolution(const PointCloud& reference) {
    if (reference.empty()) {
        throw EmptyInput("cannot derive a resolution from an empty cloud");
    }
    if (reference.bit_depth.has_value()) {
        return std::ldexp(1.0, *reference.bit_depth) - 1.0;
    }
    Vec3 lo = reference.points.front();
    Vec3 hi = lo;
    for (const Point& p : reference.points) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    const Vec3 extent = hi - lo;
    return std::max({extent.x, extent.y, extent.z});
}

}  // namespace pcq
