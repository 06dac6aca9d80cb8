#pragma once

#include <algorithm>
#include <queue>
#include <span>
#include <vector>

#include "mirror3d/geometry.hpp"

namespace mirror3d::detail {

// Static k-d tree over a borrowed point array, used for k-nearest-neighbour
// queries during normal estimation.
class KdTree {
public:
    explicit KdTree(std::span<const Point3> points) : points_(points), order_(points.size()) {
        for (std::size_t i = 0; i < order_.size(); ++i) {
            order_[i] = i;
        }
        nodes_.reserve(points.size());
        root_ = build(0, order_.size(), 0);
    }

    // Indices of the k nearest points to `query`, nearest first. Ties are
    // broken by index so the result is deterministic.
    std::vector<std::size_t> nearest(const Point3& query, std::size_t k) const {
        Heap heap;
        search(root_, query, k, heap);
        std::vector<std::size_t> out(heap.size());
        for (std::size_t i = out.size(); i-- > 0;) {
            out[i] = heap.top().second;
            heap.pop();
        }
        return out;
    }

private:
    struct Node {
        std::size_t point = 0;
        int axis = 0;
        int left = -1;
        int right = -1;
    };
    using Entry = std::pair<double, std::size_t>;
    using Heap = std::priority_queue<Entry>;

    int build(std::size_t begin, std::size_t end, int depth) {
        if (begin >= end) {
            return -1;
        }
        const int axis = depth % 3;
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                         order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                             const double pa = points_[a](axis);
                             const double pb = points_[b](axis);
                             return pa < pb || (pa == pb && a < b);
                         });
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back({order_[mid], axis, -1, -1});
        const int left = build(begin, mid, depth + 1);
        const int right = build(mid + 1, end, depth + 1);
        nodes_[static_cast<std::size_t>(id)].left = left;
        nodes_[static_cast<std::size_t>(id)].right = right;
        return id;
    }

    void search(int id, const Point3& q, std::size_t k, Heap& heap) const {
        if (id < 0) {
            return;
        }
        const Node& node = nodes_[static_cast<std::size_t>(id)];
        const Entry entry{(points_[node.point] - q).squaredNorm(), node.point};
        if (heap.size() < k) {
            heap.push(entry);
        } else if (entry < heap.top()) {
            heap.pop();
            heap.push(entry);
        }
        const double diff = q(node.axis) - points_[node.point](node.axis);
        const int near = diff <= 0.0 ? node.left : node.right;
        const int far = diff <= 0.0 ? node.right : node.left;
        search(near, q, k, heap);
        if (heap.size() < k || diff * diff <= heap.top().first) {
            search(far, q, k, heap);
        }
    }

    std::span<const Point3> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace mirror3d::detail
