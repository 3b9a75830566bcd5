#include "memrate/fsmc.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace memrate {

void FsmcModel::floor_and_normalize_out() {
    const int k = n_outputs;
    for (int b = 0; b < trellis.n_branches(); ++b) {
        double* row = out.data() + static_cast<std::size_t>(b) * k;
        double s = 0.0;
        for (int y = 0; y < k; ++y) {
            if (row[y] < kEpsFloor) row[y] = kEpsFloor;
            s += row[y];
        }
        for (int y = 0; y < k; ++y) row[y] /= s;
    }
}

void FsmcModel::normalize_trans() {
    std::map<std::pair<int, int>, double> group_sum;
    for (const Branch& b : trellis.branches)
        group_sum[{b.s_prev, b.x}] += trans[static_cast<std::size_t>(b.id)];
    for (const Branch& b : trellis.branches) {
        double s = group_sum[{b.s_prev, b.x}];
        if (s > 0.0) trans[static_cast<std::size_t>(b.id)] /= s;
    }
}

void AuxBackwardParams::rescale_max_to_one() {
    double m = 0.0;
    for (double x : v) m = std::max(m, x);
    if (m > 0.0)
        for (double& x : v) x /= m;
}

std::vector<double> natural_transitions(const TrellisSection& ts) {
    std::map<std::pair<int, int>, int> fanout;
    for (const Branch& b : ts.branches) fanout[{b.s_prev, b.x}]++;
    std::vector<double> t(static_cast<std::size_t>(ts.n_branches()));
    for (const Branch& b : ts.branches)
        t[static_cast<std::size_t>(b.id)] = 1.0 / fanout[{b.s_prev, b.x}];
    return t;
}

void check_forward_params(const FsmcModel& m, double tol) {
    if (static_cast<int>(m.trans.size()) != m.trellis.n_branches())
        throw std::invalid_argument("forward params: trans size mismatch");
    if (m.out.size() != static_cast<std::size_t>(m.trellis.n_branches()) * m.n_outputs)
        throw std::invalid_argument("forward params: out table size mismatch");
    std::map<std::pair<int, int>, double> group_sum;
    for (const Branch& b : m.trellis.branches)
        group_sum[{b.s_prev, b.x}] += m.trans[static_cast<std::size_t>(b.id)];
    for (const auto& [k, s] : group_sum)
        if (std::abs(s - 1.0) > tol)
            throw std::invalid_argument("forward params: transition group (" +
                                        std::to_string(k.first) + "," + std::to_string(k.second) +
                                        ") sums to " + std::to_string(s));
    for (int b = 0; b < m.trellis.n_branches(); ++b) {
        double s = 0.0;
        for (int y = 0; y < m.n_outputs; ++y) s += m.out_at(b, y);
        if (std::abs(s - 1.0) > tol)
            throw std::invalid_argument("forward params: output row " + std::to_string(b) +
                                        " sums to " + std::to_string(s));
    }
}

namespace {

void write_trellis(const TrellisSection& ts, std::ostream& os) {
    os << "states " << ts.n_states << "\n";
    os << "inputs";
    for (double v : ts.input_alphabet.symbols) os << ' ' << v;
    os << "\n";
    os << "controllable " << (ts.controllable ? 1 : 0) << "\n";
    os << "branches " << ts.n_branches() << "\n";
    for (const Branch& b : ts.branches)
        os << b.id << ' ' << b.s_prev << ' ' << b.x << ' ' << b.s_next << "\n";
}

TrellisSection read_trellis(std::istream& is) {
    TrellisSection ts;
    std::string tok, line;
    is >> tok >> ts.n_states;
    if (tok != "states") throw std::runtime_error("checkpoint: expected 'states'");
    is >> tok;
    if (tok != "inputs") throw std::runtime_error("checkpoint: expected 'inputs'");
    std::getline(is, line);
    std::istringstream ls(line);
    double v;
    while (ls >> v) ts.input_alphabet.symbols.push_back(v);
    int ctrl, nb;
    is >> tok >> ctrl;
    ts.controllable = ctrl != 0;
    is >> tok >> nb;
    ts.branches.resize(static_cast<std::size_t>(nb));
    for (Branch& b : ts.branches) is >> b.id >> b.s_prev >> b.x >> b.s_next;
    return ts;
}

}  // namespace

void save_forward_params(const FsmcModel& m, std::ostream& os) {
    os.precision(17);
    os << "memrate-af 1\n";
    write_trellis(m.trellis, os);
    os << "outputs " << m.n_outputs << "\n";
    for (int b = 0; b < m.trellis.n_branches(); ++b) {
        os << "t " << b << ' ' << m.trans[static_cast<std::size_t>(b)] << "\n";
        os << "o " << b;
        for (int y = 0; y < m.n_outputs; ++y) os << ' ' << m.out_at(b, y);
        os << "\n";
    }
}

FsmcModel load_forward_params(std::istream& is) {
    std::string magic;
    int ver;
    is >> magic >> ver;
    if (magic != "memrate-af") throw std::runtime_error("checkpoint: not a forward-params file");
    FsmcModel m;
    m.trellis = read_trellis(is);
    std::string tok;
    is >> tok >> m.n_outputs;
    m.trans.resize(static_cast<std::size_t>(m.trellis.n_branches()));
    m.out.resize(static_cast<std::size_t>(m.trellis.n_branches()) * m.n_outputs);
    for (int i = 0; i < m.trellis.n_branches(); ++i) {
        int b;
        is >> tok >> b >> m.trans[static_cast<std::size_t>(b)];
        is >> tok >> b;
        for (int y = 0; y < m.n_outputs; ++y) is >> m.out_at(b, y);
    }
    return m;
}

void save_backward_params(const AuxBackwardParams& p, std::ostream& os) {
    os.precision(17);
    os << "memrate-ab 1\n";
    write_trellis(p.trellis, os);
    os << "outputs " << p.n_outputs << " d1 " << p.d1 << " d2 " << p.d2 << "\n";
    const std::int64_t nc = p.n_ctx();
    for (int b = 0; b < p.trellis.n_branches(); ++b)
        for (std::int64_t c = 0; c < nc; ++c)
            os << b << ' ' << c << ' ' << p.v_at(b, c) << "\n";
}

AuxBackwardParams load_backward_params(std::istream& is) {
    std::string magic;
    int ver;
    is >> magic >> ver;
    if (magic != "memrate-ab") throw std::runtime_error("checkpoint: not a backward-params file");
    AuxBackwardParams p;
    p.trellis = read_trellis(is);
    std::string tok;
    is >> tok >> p.n_outputs >> tok >> p.d1 >> tok >> p.d2;
    p.v.resize(static_cast<std::size_t>(p.trellis.n_branches()) * p.n_ctx());
    for (std::size_t i = 0; i < p.v.size(); ++i) {
        int b;
        std::int64_t c;
        double val;
        is >> b >> c >> val;
        p.v_at(b, c) = val;
    }
    return p;
}

std::string forward_params_to_string(const FsmcModel& m) {
    std::ostringstream os;
    save_forward_params(m, os);
    return os.str();
}

std::string backward_params_to_string(const AuxBackwardParams& p) {
    std::ostringstream os;
    save_backward_params(p, os);
    return os.str();
}

}  // namespace memrate
