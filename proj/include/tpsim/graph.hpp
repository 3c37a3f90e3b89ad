/// @file graph.hpp
/// @brief Dependency graph of named indices.
///
/// Independent nodes hold a value; dependent nodes hold a function of their
/// parents. Evaluation visits nodes in a topological order (ties broken by
/// insertion order, so the order is deterministic) and stores every value
/// under its node name.

#pragma once

#include <any>
#include <functional>
#include <map>
#include <queue>
#include <string>
#include <typeinfo>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace tpsim {

class NodeValues {
public:
    template <class T>
    const T& get(const std::string& name) const {
        auto it = values_.find(name);
        if (it == values_.end()) throw std::out_of_range("no value for node '" + name + "'");
        const T* v = std::any_cast<T>(&it->second);
        if (v == nullptr) throw std::bad_any_cast();
        return *v;
    }

    bool contains(const std::string& name) const { return values_.count(name) != 0; }
    void set(const std::string& name, std::any value) { values_[name] = std::move(value); }

private:
    std::map<std::string, std::any> values_;
};

class EvaluationGraph {
public:
    using Compute = std::function<std::any(const NodeValues&)>;

    struct Node {
        std::string name;
        std::vector<std::string> parents;
        bool independent = false;
        std::any value;
        Compute compute;
    };

    void add_input(std::string name, std::any value) {
        insert(Node{std::move(name), {}, true, std::move(value), {}});
    }

    void add_node(std::string name, std::vector<std::string> parents, Compute compute) {
        insert(Node{std::move(name), std::move(parents), false, {}, std::move(compute)});
    }

    const std::vector<Node>& nodes() const noexcept { return nodes_; }

    std::vector<std::string> independent_names() const {
        std::vector<std::string> out;
        for (const auto& n : nodes_)
            if (n.independent) out.push_back(n.name);
        return out;
    }

    // Kahn's algorithm; throws on unknown parents or cycles.
    std::vector<std::size_t> topological_order() const {
        std::vector<std::size_t> indegree(nodes_.size(), 0);
        std::vector<std::vector<std::size_t>> children(nodes_.size());
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            for (const auto& parent : nodes_[i].parents) {
                auto it = index_.find(parent);
                if (it == index_.end()) throw NodeError(nodes_[i].name, "unknown parent '" + parent + "'");
                children[it->second].push_back(i);
                ++indegree[i];
            }
        }
        std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            if (indegree[i] == 0) ready.push(i);
        std::vector<std::size_t> order;
        order.reserve(nodes_.size());
        while (!ready.empty()) {
            const auto i = ready.top();
            ready.pop();
            order.push_back(i);
            for (auto c : children[i])
                if (--indegree[c] == 0) ready.push(c);
        }
        if (order.size() != nodes_.size()) {
            for (std::size_t i = 0; i < nodes_.size(); ++i)
                if (indegree[i] != 0) throw NodeError(nodes_[i].name, "dependency cycle");
        }
        return order;
    }

    // Errors from a node's function are rethrown as NodeError naming it.
    NodeValues evaluate() const {
        NodeValues values;
        for (auto i : topological_order()) {
            const Node& n = nodes_[i];
            if (n.independent) {
                values.set(n.name, n.value);
                continue;
            }
            try {
                values.set(n.name, n.compute(values));
            } catch (const NodeError&) {
                throw;
            } catch (const std::exception& e) {
                throw NodeError(n.name, e.what());
            }
        }
        return values;
    }

private:
    void insert(Node node) {
        if (index_.count(node.name) != 0) throw NodeError(node.name, "duplicate node name");
        index_.emplace(node.name, nodes_.size());
        nodes_.push_back(std::move(node));
    }

    std::vector<Node> nodes_;
    std::map<std::string, std::size_t> index_;
};

} // namespace tpsim
