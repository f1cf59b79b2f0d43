// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#include "scarf/tensor.hpp"

#include <atomic>
#include <sstream>

namespace scarf {
inline namespace SCARF_PRECISION_NS {

std::int64_t shape_numel(const Shape& dims) {
    std::int64_t n = 1;
    for (auto d : dims) {
        if (d < 0) throw ShapeError("negative extent in shape " + shape_str(dims));
        n *= d;
    }
    return n;
}

std::string shape_str(const Shape& dims) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) os << ',';
        os << dims[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor() : data_(std::make_shared<std::vector<Real>>(1, Real(0))) {}

Tensor::Tensor(Shape dims)
    : dims_(std::move(dims)), data_(std::make_shared<std::vector<Real>>(static_cast<std::size_t>(shape_numel(dims_)))) {}

Tensor::Tensor(Shape dims, std::vector<Real> values) : dims_(std::move(dims)) {
    if (shape_numel(dims_) != static_cast<std::int64_t>(values.size())) {
        throw ShapeError("tensor of shape " + shape_str(dims_) + " cannot hold " + std::to_string(values.size()) +
                         " values");
    }
    data_ = std::make_shared<std::vector<Real>>(std::move(values));
}

Tensor Tensor::full(Shape dims, Real value) {
    Tensor t(std::move(dims));
    std::fill(t.data_->begin(), t.data_->end(), value);
    return t;
}

Tensor Tensor::scalar(Real value) { return Tensor(Shape{}, std::vector<Real>{value}); }

std::int64_t Tensor::dim(int i) const {
    if (i < 0) i += rank();
    if (i < 0 || i >= rank()) throw ShapeError("dimension index out of range for shape " + shape_str(dims_));
    return dims_[static_cast<std::size_t>(i)];
}

std::span<Real> Tensor::mutable_data() {
    if (data_.use_count() > 1) data_ = std::make_shared<std::vector<Real>>(*data_);
    return *data_;
}

Real Tensor::item() const {
    if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(dims_));
    return (*data_)[0];
}

Real Tensor::at(std::int64_t c, std::int64_t y, std::int64_t x) const {
    return (*data_)[static_cast<std::size_t>((c * dims_[1] + y) * dims_[2] + x)];
}

Tensor Tensor::detached() const {
    Tensor t = *this;
    t.requires_grad_ = false;
    t.node_ = -1;
    t.tape_id_ = 0;
    return t;
}

Tensor Tensor::clone() const { return Tensor(dims_, *data_); }

Tensor Tensor::reshaped(Shape dims) const {
    if (shape_numel(dims) != numel()) {
        throw ShapeError("cannot reshape " + shape_str(dims_) + " to " + shape_str(dims));
    }
    Tensor t = detached();
    t.dims_ = std::move(dims);
    return t;
}

namespace {

std::atomic<std::uint64_t> next_tape_id{1};
thread_local Tape* active_tape = nullptr;

}  // namespace

Tape::Tape() : id_(next_tape_id.fetch_add(1)), previous_(active_tape) { active_tape = this; }

Tape::~Tape() { active_tape = previous_; }

Tape* Tape::active() { return active_tape; }

bool Tape::tracks(const Tensor& t) const { return t.node_ >= 0 && t.tape_id_ == id_; }

std::int64_t Tape::push_node(std::string_view op, std::vector<std::int64_t> inputs, const Shape& dims,
                             BackwardFn fn) {
    if (backward_done_) throw AutodiffError("cannot record on a tape after backward(); call reset() first");
    nodes_.push_back(Node{std::string(op), std::move(inputs), dims, std::move(fn)});
    grads_.emplace_back();
    return static_cast<std::int64_t>(nodes_.size()) - 1;
}

Tensor Tape::watch(const Tensor& leaf) {
    Tensor t = leaf.detached();
    t.node_ = push_node("leaf", {}, t.dims(), nullptr);
    t.tape_id_ = id_;
    t.requires_grad_ = true;
    return t;
}

Tensor Tape::record(Tensor out, std::initializer_list<const Tensor*> inputs, std::string_view op, BackwardFn fn) {
    return record(std::move(out), std::span<const Tensor* const>(inputs.begin(), inputs.size()), op, std::move(fn));
}

Tensor Tape::record(Tensor out, std::span<const Tensor* const> inputs, std::string_view op, BackwardFn fn) {
    bool any = false;
    std::vector<std::int64_t> ids;
    ids.reserve(inputs.size());
    for (const Tensor* in : inputs) {
        if (tracks(*in)) {
            any = true;
            ids.push_back(in->node_);
        } else {
            ids.push_back(-1);
        }
    }
    if (!any) return out.detached();
    out.node_ = push_node(op, std::move(ids), out.dims(), std::move(fn));
    out.tape_id_ = id_;
    out.requires_grad_ = true;
    return out;
}

void Tape::backward(const Tensor& loss) {
    if (loss.numel() != 1) throw AutodiffError("backward() requires a scalar loss, got " + shape_str(loss.dims()));
    if (!tracks(loss)) throw AutodiffError("backward() on a tensor that is not on this tape");
    if (backward_done_) throw AutodiffError("backward() called twice without reset()");
    backward_done_ = true;

    grads_[static_cast<std::size_t>(loss.node_)] = std::vector<Real>{Real(1)};
    std::vector<GradSlot> slots;
    for (std::int64_t id = loss.node_; id >= 0; --id) {
        Node& node = nodes_[static_cast<std::size_t>(id)];
        auto& g = grads_[static_cast<std::size_t>(id)];
        if (!node.backward || g.empty()) continue;
        slots.assign(node.inputs.size(), nullptr);
        for (std::size_t i = 0; i < node.inputs.size(); ++i) {
            const auto in = node.inputs[i];
            if (in < 0) continue;
            auto& buf = grads_[static_cast<std::size_t>(in)];
            if (buf.empty()) buf.assign(static_cast<std::size_t>(shape_numel(nodes_[static_cast<std::size_t>(in)].dims)), Real(0));
            slots[i] = &buf;
        }
        node.backward(g, slots);
        // Interior gradients are no longer needed once propagated.
        if (!node.inputs.empty()) std::vector<Real>().swap(g);
    }
}

Tensor Tape::grad(const Tensor& t) const {
    if (!tracks(t)) return Tensor::zeros(t.dims());
    const auto& g = grads_[static_cast<std::size_t>(t.node_)];
    if (g.empty()) return Tensor::zeros(t.dims());
    return Tensor(t.dims(), g);
}

void Tape::reset() {
    nodes_.clear();
    grads_.clear();
    backward_done_ = false;
    id_ = next_tape_id.fetch_add(1);
}

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
