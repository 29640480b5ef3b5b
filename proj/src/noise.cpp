#include "bdsde/noise.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "bdsde/csv.hpp"

namespace bdsde {

IncrementArray::IncrementArray(const TimeGrid& grid, int dim, StreamKey key, long long origin,
                               int dir, double sign)
    : grid_(grid), dim_(dim), key_(key), origin_(origin), dir_(dir), sign_(sign) {
    if (dim_ < 1) throw std::invalid_argument("IncrementArray: dim must be >= 1");
    if (grid_.n_steps == 0) throw std::invalid_argument("IncrementArray: empty grid");
    data_.resize(grid_.n_steps * static_cast<std::size_t>(dim_));
    const double scale = sign_ * std::sqrt(grid_.h);
    for (std::size_t i = 0; i < grid_.n_steps; ++i) {
        const std::int64_t gi = origin_ + dir_ * static_cast<long long>(i);
        for (int c = 0; c < dim_; ++c)
            data_[i * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(c)] =
                scale * normal_at(key_, gi, static_cast<std::uint32_t>(c));
    }
}

IncrementArray IncrementArray::generate(const TimeGrid& grid, int dim, StreamKey key) {
    // Generator index == lattice step, so arrays from the same stream agree on
    // overlapping windows no matter where the window starts.
    return IncrementArray(grid, dim, key, grid.first_step, 1, 1.0);
}

IncrementArray IncrementArray::reversed(double T) const {
    if (grid_.first_step != 0)
        throw std::invalid_argument("reversed: grid must start at time 0");
    if (!grid_.contains_time(T) || grid_.index_of_time(T) != grid_.n_steps)
        throw std::invalid_argument("reversed: grid must cover [0, T] exactly");
    // Entry i of the reversed path is -(entry n-1-i), so run the generator
    // index backwards from the last entry and flip the sign.
    const long long n = static_cast<long long>(grid_.n_steps);
    return IncrementArray(grid_, dim_, key_, origin_ + dir_ * (n - 1), -dir_, -sign_);
}

IncrementArray IncrementArray::shifted(long long r_steps) const {
    if (r_steps < 0) throw std::invalid_argument("shifted: only forward shifts are supported");
    return IncrementArray(grid_, dim_, key_, origin_ + dir_ * r_steps, dir_, sign_);
}

IncrementArray IncrementArray::window(const TimeGrid& target) const {
    if (target.h != grid_.h)
        throw std::invalid_argument("window: target grid has a different pitch");
    // Entry j of the target covers lattice step first_step + j of the same
    // process; translate that into this array's generator indexing.
    const long long delta = target.first_step - grid_.first_step;
    return IncrementArray(target, dim_, key_, origin_ + dir_ * delta, dir_, sign_);
}

double IncrementArray::value_at_step(long long lattice_step, int c) const {
    const std::int64_t gi = origin_ + dir_ * (lattice_step - grid_.first_step);
    return sign_ * std::sqrt(grid_.h) * normal_at(key_, gi, static_cast<std::uint32_t>(c));
}

std::vector<double> IncrementArray::cumulative(std::size_t i) const {
    std::vector<double> acc(static_cast<std::size_t>(dim_), 0.0);
    for (std::size_t k = 0; k < i; ++k)
        for (int c = 0; c < dim_; ++c) acc[static_cast<std::size_t>(c)] += value(k, c);
    return acc;
}

void IncrementArray::write_csv(std::ostream& os) const {
    os << "# seed=" << key_.seed << " stream=" << key_.stream << " h=" << csv::number(grid_.h)
       << " n_steps=" << grid_.n_steps << " first_step=" << grid_.first_step << " dim=" << dim_
       << " origin=" << origin_ << " dir=" << dir_ << " sign=" << csv::number(sign_) << "\n";
    os << "step,component,value\n";
    for (std::size_t i = 0; i < grid_.n_steps; ++i)
        for (int c = 0; c < dim_; ++c)
            os << i << "," << c << "," << csv::number(value(i, c)) << "\n";
}

namespace {

struct Header {
    StreamKey key;
    double h = 0, sign = 1;
    std::size_t n_steps = 0;
    long long first_step = 0, origin = 0;
    int dim = 0, dir = 1;
};

Header parse_header(const std::string& line) {
    Header hd;
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;  // '#'
    while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string k = tok.substr(0, eq);
        const std::string v = tok.substr(eq + 1);
        if (k == "seed") hd.key.seed = std::stoull(v);
        else if (k == "stream") hd.key.stream = std::stoull(v);
        else if (k == "h") hd.h = std::stod(v);
        else if (k == "n_steps") hd.n_steps = std::stoull(v);
        else if (k == "first_step") hd.first_step = std::stoll(v);
        else if (k == "dim") hd.dim = std::stoi(v);
        else if (k == "origin") hd.origin = std::stoll(v);
        else if (k == "dir") hd.dir = std::stoi(v);
        else if (k == "sign") hd.sign = std::stod(v);
    }
    return hd;
}

IncrementArray rebuild(const Header& hd, const std::vector<double>& values) {
    // Reconstruct through the provenance so shift/reverse algebra keeps working,
    // then verify the stored payload matches the regeneration bit for bit.
    TimeGrid grid{hd.h, hd.first_step, hd.n_steps};
    IncrementArray out =
        IncrementArray::from_provenance(grid, hd.dim, hd.key, hd.origin, hd.dir, hd.sign);
    if (values.size() != out.flat().size())
        throw std::runtime_error("increment file: payload size mismatch");
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] != out.flat()[i])
            throw std::runtime_error("increment file: payload does not match provenance");
    return out;
}

}  // namespace

IncrementArray IncrementArray::read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.empty() || line[0] != '#')
        throw std::runtime_error("increment csv: missing provenance header");
    const Header hd = parse_header(line);
    if (!std::getline(is, line)) throw std::runtime_error("increment csv: missing column row");
    std::vector<double> values;
    values.reserve(hd.n_steps * static_cast<std::size_t>(hd.dim));
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        values.push_back(std::stod(line.substr(c2 + 1)));
    }
    return rebuild(hd, values);
}

void IncrementArray::write_binary(std::ostream& os) const {
    const char magic[8] = {'b', 'd', 'i', 'n', 'c', 'r', '0', '1'};
    os.write(magic, 8);
    auto put = [&os](const void* p, std::size_t n) {
        os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    };
    put(&key_.seed, 8);
    put(&key_.stream, 8);
    put(&grid_.h, 8);
    const std::uint64_t ns = grid_.n_steps;
    put(&ns, 8);
    put(&grid_.first_step, 8);
    const std::int64_t dim = dim_, dir = dir_;
    put(&dim, 8);
    put(&origin_, 8);
    put(&dir, 8);
    put(&sign_, 8);
    put(data_.data(), data_.size() * sizeof(double));
}

IncrementArray IncrementArray::read_binary(std::istream& is) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, "bdincr01", 8) != 0)
        throw std::runtime_error("increment binary: bad magic");
    auto get = [&is](void* p, std::size_t n) {
        is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    };
    Header hd;
    std::uint64_t ns = 0;
    std::int64_t dim = 0, dir = 0;
    get(&hd.key.seed, 8);
    get(&hd.key.stream, 8);
    get(&hd.h, 8);
    get(&ns, 8);
    get(&hd.first_step, 8);
    get(&dim, 8);
    get(&hd.origin, 8);
    get(&dir, 8);
    get(&hd.sign, 8);
    hd.n_steps = ns;
    hd.dim = static_cast<int>(dim);
    hd.dir = static_cast<int>(dir);
    std::vector<double> values(hd.n_steps * static_cast<std::size_t>(hd.dim));
    get(values.data(), values.size() * sizeof(double));
    if (!is) throw std::runtime_error("increment binary: truncated payload");
    return rebuild(hd, values);
}

IncrementArray generate_increments(const TimeGrid& grid, int dim, std::uint64_t seed,
                                   std::uint64_t stream) {
    return IncrementArray::generate(grid, dim, StreamKey{seed, stream});
}

IncrementArray reverse_path(const IncrementArray& b, double T) { return b.reversed(T); }

IncrementArray shift_increments(const IncrementArray& arr, long long r_steps) {
    return arr.shifted(r_steps);
}

std::vector<double> mollified_path(const IncrementArray& arr, std::size_t window_steps, int c) {
    const std::size_t n = arr.grid().n_steps;
    std::vector<double> path(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) path[i + 1] = path[i] + arr.value(i, c);
    if (window_steps < 2) return path;
    std::vector<double> smooth(n + 1, 0.0);
    const long long half = static_cast<long long>(window_steps) / 2;
    for (std::size_t i = 0; i <= n; ++i) {
        const long long lo = std::max<long long>(0, static_cast<long long>(i) - half);
        const long long hi = std::min<long long>(static_cast<long long>(n),
                                                 static_cast<long long>(i) + half);
        double acc = 0.0;
        for (long long j = lo; j <= hi; ++j) acc += path[static_cast<std::size_t>(j)];
        smooth[i] = acc / static_cast<double>(hi - lo + 1);
    }
    return smooth;
}

}  // namespace bdsde
