#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pcq/point_cloud.hpp"

namespace pcq {

struct Neighbor {
    std::size_t index;
    double squared_distance;
};

// Exact k-nearest-neighbor index over a fixed set of points. Query results
// are identical to a brute-force scan; distance ties are broken by the lowest
// original point index. Immutable after construction, safe for concurrent
// read-only queries.
class KdTree {
public:
    explicit KdTree(const PointCloud& cloud);
    explicit KdTree(std::vector<Point> points);

    std::size_t size() const { return points_.size(); }

    // k results sorted ascending by (squared distance, index).
    std::vector<Neighbor> nearest_neighbors(const Point& query, std::size_t k) const;
    Neighbor nearest(const Point& query) const;

private:
    struct Node {
        // Leaf: [begin, end) into order_. Split node: axis + split value.
        std::uint32_t begin = 0;
        std::uint32_t end = 0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        int axis = -1;
        double split = 0.0;
    };

    struct KBest;

    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    void search(std::int32_t node, const Point& query, KBest& best) const;

    std::vector<Point> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::int32_t root_ = -1;

    static constexpr std::uint32_t kLeafSize = 16;
};

}  // namespace pcq
