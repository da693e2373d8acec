#include "pcq/kd_tree.hpp"

#include <algorithm>
#include <limits>

#include "pcq/errors.hpp"

namespace pcq {

namespace {

inline double coord(const Point& p, int axis) {
    return axis == 0 ? p.x : axis == 1 ? p.y : p.z;
}

// Orders (d2, index) pairs; lower index wins on equal distance.
inline bool closer(double d2_a, std::size_t idx_a, double d2_b, std::size_t idx_b) {
    return d2_a < d2_b || (d2_a == d2_b && idx_a < idx_b);
}

}  // namespace

// Bounded best-k set kept as a max-heap on (d2, index).
struct KdTree::KBest {
    explicit KBest(std::size_t k) : capacity(k) { heap.reserve(k); }

    std::size_t capacity;
    std::vector<Neighbor> heap;

    static bool heap_less(const Neighbor& a, const Neighbor& b) {
        return closer(a.squared_distance, a.index, b.squared_distance, b.index);
    }

    bool full() const { return heap.size() == capacity; }
    double worst_d2() const { return heap.front().squared_distance; }

    void offer(std::size_t index, double d2) {
        if (!full()) {
            heap.push_back({index, d2});
            std::push_heap(heap.begin(), heap.end(), heap_less);
        } else if (closer(d2, index, heap.front().squared_distance, heap.front().index)) {
            std::pop_heap(heap.begin(), heap.end(), heap_less);
            heap.back() = {index, d2};
            std::push_heap(heap.begin(), heap.end(), heap_less);
        }
    }
};

KdTree::KdTree(const PointCloud& cloud) : KdTree(cloud.points) {}

KdTree::KdTree(std::vector<Point> points) : points_(std::move(points)) {
    if (points_.empty()) {
        throw EmptyInput("cannot build a spatial index over an empty point cloud");
    }
    order_.resize(points_.size());
    for (std::uint32_t i = 0; i < order_.size(); ++i) {
        order_[i] = i;
    }
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    root_ = build(0, static_cast<std::uint32_t>(order_.size()));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
    Node node;
    node.begin = begin;
    node.end = end;
    if (end - begin <= kLeafSize) {
        nodes_.push_back(node);
        return static_cast<std::int32_t>(nodes_.size() - 1);
    }

    // Split along the widest axis at the median element.
    Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
    Vec3 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity()};
    for (std::uint32_t i = begin; i < end; ++i) {
        const Point& p = points_[order_[i]];
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    const Vec3 extent = hi - lo;
    int axis = 0;
    if (extent.y > coord(extent, axis)) axis = 1;
    if (extent.z > coord(extent, axis)) axis = 2;

    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double ca = coord(points_[a], axis);
                         const double cb = coord(points_[b], axis);
                         return ca < cb || (ca == cb && a < b);
                     });

    node.axis = axis;
    node.split = coord(points_[order_[mid]], axis);
    nodes_.push_back(node);
    const auto id = static_cast<std::int32_t>(nodes_.size() - 1);
    const std::int32_t left = build(begin, mid);
    const std::int32_t right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

void KdTree::search(std::int32_t node_id, const Point& query, KBest& best) const {
    const Node& node = nodes_[static_cast<std::size_t>(node_id)];
    if (node.axis < 0) {
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
            const std::uint32_t idx = order_[i];
            best.offer(idx, squared_distance(points_[idx], query));
        }
        return;
    }

    const double delta = coord(query, node.axis) - node.split;
    const std::int32_t near = delta < 0.0 ? node.left : node.right;
    const std::int32_t far = delta < 0.0 ? node.right : node.left;
    search(near, query, best);
    // A tied plane distance can still hide a lower-index tie, so only a
    // strictly larger bound allows pruning.
    if (!best.full() || delta * delta <= best.worst_d2()) {
        search(far, query, best);
    }
}

std::vector<Neighbor> KdTree::nearest_neighbors(const Point& query, std::size_t k) const {
    if (k == 0 || k > points_.size()) {
        throw InvalidArgument("k must be in [1, " + std::to_string(points_.size()) +
                              "], got " + std::to_string(k));
    }
    KBest best(k);
    search(root_, query, best);
    std::sort(best.heap.begin(), best.heap.end(), [](const Neighbor& a, const Neighbor& b) {
        return closer(a.squared_distance, a.index, b.squared_distance, b.index);
    });
    return std::move(best.heap);
}

Neighbor KdTree::nearest(const Point& query) const {
    return nearest_neighbors(query, 1).front();
}

}  // namespace pcq
