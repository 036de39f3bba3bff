#include "snlab/category_io.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace snlab {

using nlohmann::json;

namespace {

class ExprParser {
public:
    explicit ExprParser(const std::string& s) : s_(s) {}

    double parse() {
        const double v = expr();
        skip_ws();
        if (pos_ != s_.size()) fail("trailing characters");
        return v;
    }

private:
    const std::string& s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& why) const {
        throw IoError("cannot evaluate expression '" + s_ + "': " + why + " at offset " + std::to_string(pos_));
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    double expr() {
        double v = term();
        for (;;) {
            if (eat('+')) v += term();
            else if (eat('-')) v -= term();
            else return v;
        }
    }

    double term() {
        double v = unary();
        for (;;) {
            if (eat('*')) v *= unary();
            else if (eat('/')) v /= unary();
            else return v;
        }
    }

    double unary() {
        if (eat('-')) return -unary();
        if (eat('+')) return unary();
        return power();
    }

    double power() {
        const double base = primary();
        if (eat('^')) return std::pow(base, unary());
        return base;
    }

    double primary() {
        skip_ws();
        if (eat('(')) {
            const double v = expr();
            if (!eat(')')) fail("expected ')'");
            return v;
        }
        if (pos_ >= s_.size()) fail("unexpected end");
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            double v;
            try {
                v = std::stod(s_.substr(pos_), &used);
            } catch (const std::exception&) {
                fail("bad number");
            }
            pos_ += used;
            return v;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            const std::string id = s_.substr(start, pos_ - start);
            if (id == "phi") return std::numbers::phi;
            if (id == "pi") return std::numbers::pi;
            if (!eat('(')) fail("unknown identifier '" + id + "'");
            const double arg = expr();
            if (!eat(')')) fail("expected ')'");
            if (id == "sqrt") return std::sqrt(arg);
            if (id == "exp") return std::exp(arg);
            if (id == "sin") return std::sin(arg);
            if (id == "cos") return std::cos(arg);
            fail("unknown function '" + id + "'");
        }
        fail("unexpected character");
    }
};

double number_field(const json& rec, const char* key) {
    if (!rec.contains(key)) return 0.0;
    const json& v = rec.at(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return evaluate_expression(v.get<std::string>());
    throw IoError(std::string("field '") + key + "' must be a number or expression string");
}

} // namespace

double evaluate_expression(const std::string& expr) { return ExprParser(expr).parse(); }

json category_to_json(const FusionCategory& cat) {
    json doc;
    doc["name"] = cat.name;
    doc["labels"] = cat.labels;
    doc["dual"] = cat.dual;
    json fusion = json::array();
    const int r = cat.rank();
    for (int a = 0; a < r; ++a)
        for (int b = 0; b < r; ++b)
            for (int c = 0; c < r; ++c)
                if (cat.N(a, b, c)) fusion.push_back({a, b, c, cat.N(a, b, c)});
    doc["fusion"] = fusion;
    json F = json::array();
    for (int a = 0; a < r; ++a)
        for (int b = 0; b < r; ++b)
            for (int c = 0; c < r; ++c)
                for (int d = 0; d < r; ++d) {
                    const FBlock& blk = cat.F(a, b, c, d);
                    for (std::size_t i = 0; i < blk.rows.size(); ++i)
                        for (std::size_t j = 0; j < blk.cols.size(); ++j) {
                            const cplx v = blk.m(i, j);
                            if (v == 0.0) continue;
                            F.push_back({{"a", a}, {"b", b}, {"c", c}, {"d", d},
                                         {"e", blk.rows[i][0]}, {"mu", blk.rows[i][1]}, {"nu", blk.rows[i][2]},
                                         {"f", blk.cols[j][0]}, {"alpha", blk.cols[j][1]}, {"beta", blk.cols[j][2]},
                                         {"re", v.real()}, {"im", v.imag()}});
                        }
                }
    doc["F"] = F;
    doc["qdim"] = cat.qdim;
    doc["kappa"] = cat.kappa;
    return doc;
}

FusionCategory category_from_json(const json& doc, bool force, double tol) {
    FusionCategory cat;
    try {
        cat.name = doc.value("name", std::string("custom"));
        cat.labels = doc.at("labels").get<std::vector<std::string>>();
        cat.dual = doc.at("dual").get<std::vector<int>>();
        const int r = cat.rank();
        if (r < 1) throw IoError("category needs at least one label");
        if (static_cast<int>(cat.dual.size()) != r) throw IoError("dual array length differs from label count");
        cat.fusion.assign(static_cast<std::size_t>(r) * r * r, 0);
        for (const auto& rec : doc.at("fusion")) {
            const auto t = rec.get<std::vector<int>>();
            if (t.size() != 4) throw IoError("fusion entries must be [a,b,c,N]");
            for (int k = 0; k < 3; ++k)
                if (t[k] < 0 || t[k] >= r) throw IoError("fusion entry label out of range");
            cat.fusion[(t[0] * r + t[1]) * r + t[2]] = t[3];
        }
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed category document: ") + e.what());
    }

    ValidationReport ring = validate_fusion_ring(cat);
    if (!ring.ok() && !force) {
        std::string msg = "fusion ring invalid:";
        for (const auto& v : ring.violations) msg += "\n  " + v;
        throw ValidationError(msg);
    }

    init_fblock_layout(cat);
    const int r = cat.rank();
    std::set<std::array<int, 10>> seen;
    try {
        for (const auto& rec : doc.at("F")) {
            std::array<int, 10> k{};
            const char* keys[] = {"a", "b", "c", "d", "e", "f", "mu", "nu", "alpha", "beta"};
            for (int i = 0; i < 10; ++i) k[i] = rec.value(keys[i], 0);
            for (int i = 0; i < 6; ++i)
                if (k[i] < 0 || k[i] >= r) throw IoError("F record label out of range");
            FBlock& blk = cat.F(k[0], k[1], k[2], k[3]);
            const int row = blk.row_index(k[4], k[6], k[7]);
            const int col = blk.col_index(k[5], k[8], k[9]);
            if (row < 0 || col < 0)
                throw ValidationError("F record for inadmissible channel (" + std::to_string(k[0]) + "," +
                                      std::to_string(k[1]) + "," + std::to_string(k[2]) + "," +
                                      std::to_string(k[3]) + ";" + std::to_string(k[4]) + "," +
                                      std::to_string(k[5]) + ")");
            if (!seen.insert(k).second) throw IoError("duplicate F record");
            blk.m(row, col) = cplx(number_field(rec, "re"), number_field(rec, "im"));
        }
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed F records: ") + e.what());
    }
    // Zero entries may be omitted, but every admissible block needs at least
    // one record.
    for (int a = 0; a < r; ++a)
        for (int b = 0; b < r; ++b)
            for (int c = 0; c < r; ++c)
                for (int d = 0; d < r; ++d) {
                    const FBlock& blk = cat.F(a, b, c, d);
                    if (blk.empty()) continue;
                    bool any = false;
                    for (const auto& k : seen)
                        if (k[0] == a && k[1] == b && k[2] == c && k[3] == d) any = true;
                    if (!any && !force)
                        throw ValidationError("missing F records for admissible block (" + std::to_string(a) + "," +
                                              std::to_string(b) + "," + std::to_string(c) + "," +
                                              std::to_string(d) + ")");
                }

    if (doc.contains("qdim")) cat.qdim = doc.at("qdim").get<std::vector<double>>();
    if (doc.contains("kappa")) cat.kappa = doc.at("kappa").get<std::vector<int>>();
    if (!cat.qdim.empty() && static_cast<int>(cat.qdim.size()) != r) throw IoError("qdim length differs from rank");
    if (!cat.kappa.empty() && static_cast<int>(cat.kappa.size()) != r) throw IoError("kappa length differs from rank");

    if (force) {
        try {
            finalize_category(cat);
        } catch (const Error&) {
            if (cat.qdim.empty()) throw;
            cat.kappa.assign(r, 1);
            for (int a = 0; a < r; ++a)
                if ((cat.qdim[a] * cat.F(a, cat.dual[a], a, a, 0, 0)).real() < 0) cat.kappa[a] = -1;
        }
        return cat;
    }

    ValidationReport rep = validate_all(cat, tol);
    if (rep.ok()) {
        try {
            finalize_category(cat);
        } catch (const ValidationError& e) {
            rep.add(e.what());
        }
    }
    if (!rep.ok()) {
        std::string msg = "category '" + cat.name + "' failed validation:";
        for (const auto& v : rep.violations) msg += "\n  " + v;
        throw ValidationError(msg);
    }
    return cat;
}

FusionCategory load_category(const std::string& path, bool force, double tol) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open category file " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw IoError("cannot parse " + path + ": " + e.what());
    }
    return category_from_json(doc, force, tol);
}

void save_category(const FusionCategory& cat, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write category file " + path);
    out << category_to_json(cat).dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path);
}

FusionCategory resolve_category(const std::string& source, bool force) {
    const std::string prefix = "builtin:";
    if (source.rfind(prefix, 0) == 0) return builtin(source.substr(prefix.size()));
    return load_category(source, force);
}

} // namespace snlab
