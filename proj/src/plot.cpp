#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "scm/cli.hpp"

namespace scm::cli {

namespace {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct Panel {
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    std::vector<Series> series;
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&')
            out += "&amp;";
        else if (c == '<')
            out += "&lt;";
        else if (c == '>')
            out += "&gt;";
        else
            out += c;
    }
    return out;
}

double parse_num(const std::string& s, bool& ok) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    ok = !s.empty() && end == s.c_str() + s.size();
    return v;
}

double nice_step(double range) {
    if (!(range > 0.0)) return 1.0;
    const double raw = range / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double f = raw / mag;
    return mag * (f < 1.5 ? 1.0 : f < 3.0 ? 2.0 : f < 7.0 ? 5.0 : 10.0);
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

void draw_panel(std::ostringstream& svg, const Panel& panel, double top, double width, double height) {
    const double left = 80.0, right = 20.0, bottom = 40.0, head = 10.0;
    const double w = width - left - right;
    const double h = height - bottom - head;
    const double y_top = top + head;

    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& s : panel.series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double y = panel.log_y ? std::log10(s.y[i]) : s.y[i];
            if (!std::isfinite(y) || !std::isfinite(s.x[i])) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (!(xmin <= xmax)) throw std::invalid_argument("plot: no finite data to draw");
    if (panel.log_y) {
        ymin = std::floor(ymin);
        ymax = std::ceil(ymax);
        if (ymin == ymax) ymax = ymin + 1.0;
    } else if (ymin == ymax) {
        const double pad = ymin == 0.0 ? 1.0 : 0.1 * std::abs(ymin);
        ymin -= pad;
        ymax += pad;
    }
    if (xmin == xmax) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    auto X = [&](double x) { return left + (x - xmin) / (xmax - xmin) * w; };
    auto Y = [&](double y) { return y_top + (ymax - y) / (ymax - ymin) * h; };

    svg << "<rect x=\"" << px(left) << "\" y=\"" << px(y_top) << "\" width=\"" << px(w) << "\" height=\"" << px(h)
        << "\" fill=\"none\" stroke=\"black\"/>\n";

    const double xs = nice_step(xmax - xmin);
    for (double t = std::ceil(xmin / xs) * xs; t <= xmax + 1e-9 * xs; t += xs) {
        svg << "<line x1=\"" << px(X(t)) << "\" y1=\"" << px(y_top + h) << "\" x2=\"" << px(X(t)) << "\" y2=\""
            << px(y_top + h + 5) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << px(X(t)) << "\" y=\"" << px(y_top + h + 18)
            << "\" font-size=\"11\" text-anchor=\"middle\">" << num(std::abs(t) < 1e-12 * xs ? 0.0 : t)
            << "</text>\n";
    }
    const double ys = panel.log_y ? 1.0 : nice_step(ymax - ymin);
    for (double t = std::ceil(ymin / ys) * ys; t <= ymax + 1e-9 * ys; t += ys) {
        const std::string label = panel.log_y ? "1e" + num(t) : num(std::abs(t) < 1e-12 * ys ? 0.0 : t);
        svg << "<line x1=\"" << px(left - 5) << "\" y1=\"" << px(Y(t)) << "\" x2=\"" << px(left) << "\" y2=\""
            << px(Y(t)) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << px(left - 8) << "\" y=\"" << px(Y(t) + 4) << "\" font-size=\"11\" text-anchor=\"end\">"
            << label << "</text>\n";
    }
    svg << "<text x=\"" << px(left + w / 2) << "\" y=\"" << px(y_top + h + 34)
        << "\" font-size=\"12\" text-anchor=\"middle\">" << escape(panel.x_label) << "</text>\n";
    svg << "<text x=\"16\" y=\"" << px(y_top + h / 2) << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << px(y_top + h / 2) << ")\">" << escape(panel.y_label) << "</text>\n";

    for (std::size_t k = 0; k < panel.series.size(); ++k) {
        const auto& s = panel.series[k];
        const char* color = kColors[k % 8];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
        // Long histories are thinned to about 4000 vertices.
        const std::size_t stride = std::max<std::size_t>(1, s.x.size() / 4000);
        for (std::size_t i = 0; i < s.x.size(); i += stride) {
            const double y = panel.log_y ? std::log10(s.y[i]) : s.y[i];
            if (!std::isfinite(y)) continue;
            svg << px(X(s.x[i])) << "," << px(Y(y)) << " ";
        }
        svg << "\"/>\n";
        if (s.x.size() <= 20)
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                const double y = panel.log_y ? std::log10(s.y[i]) : s.y[i];
                if (std::isfinite(y))
                    svg << "<circle cx=\"" << px(X(s.x[i])) << "\" cy=\"" << px(Y(y)) << "\" r=\"3\" fill=\"" << color
                        << "\"/>\n";
            }
        if (!s.label.empty()) {
            const double ly = y_top + 14 + 14 * k;
            svg << "<line x1=\"" << px(left + w - 90) << "\" y1=\"" << px(ly - 4) << "\" x2=\"" << px(left + w - 70)
                << "\" y2=\"" << px(ly - 4) << "\" stroke=\"" << color << "\"/>\n";
            svg << "<text x=\"" << px(left + w - 65) << "\" y=\"" << px(ly) << "\" font-size=\"11\">"
                << escape(s.label) << "</text>\n";
        }
    }
}

int column(const Csv& csv, const std::string& name) {
    for (std::size_t i = 0; i < csv.header.size(); ++i)
        if (csv.header[i] == name) return static_cast<int>(i);
    return -1;
}

double cell_value(const Csv& csv, std::size_t r, int c) {
    if (c < 0 || static_cast<std::size_t>(c) >= csv.rows[r].size())
        throw std::invalid_argument("plot: row " + std::to_string(r + 2) + " is too short");
    bool ok = false;
    const double v = parse_num(csv.rows[r][c], ok);
    if (!ok) throw std::invalid_argument("plot: non-numeric cell '" + csv.rows[r][c] + "' in row " + std::to_string(r + 2));
    return v;
}

/// Strictly positive data spanning more than three decades is drawn on a log axis.
bool wide_positive(const Panel& pan) {
    double lo = INFINITY, hi = 0.0;
    for (const auto& s : pan.series)
        for (double y : s.y) {
            if (!(y > 0.0)) return false;
            lo = std::min(lo, y);
            hi = std::max(hi, y);
        }
    return hi > 1e3 * lo;
}

}  // namespace

std::string plot_svg(const Csv& csv, const std::string& title) {
    if (csv.rows.empty() || csv.header.size() < 2) throw std::invalid_argument("plot: empty series");
    std::vector<Panel> panels;
    const int t = column(csv, "t_s");
    const int ux = column(csv, "ux_m");
    const int uy = column(csv, "uy_m");
    const int p = column(csv, "p");
    const int err = column(csv, "e_L2_percent");
    if (t >= 0 && ux >= 0 && uy >= 0) {
        Series sx{"", {}, {}}, sy{"", {}, {}};
        for (std::size_t r = 0; r < csv.rows.size(); ++r) {
            const double tv = cell_value(csv, r, t) * 1e6;
            sx.x.push_back(tv);
            sy.x.push_back(tv);
            sx.y.push_back(cell_value(csv, r, ux));
            sy.y.push_back(cell_value(csv, r, uy));
        }
        panels.push_back({"t [us]", "u_x [m]", false, {sx}});
        panels.push_back({"t [us]", "u_y [m]", false, {sy}});
    } else if (p >= 0 && err >= 0) {
        const int var = column(csv, "variant");
        std::map<std::string, Series> by;
        std::vector<std::string> order;
        for (std::size_t r = 0; r < csv.rows.size(); ++r) {
            const std::string key = var >= 0 ? csv.rows[r].at(var) : "";
            if (!by.count(key)) {
                order.push_back(key);
                by[key].label = key;
            }
            by[key].x.push_back(cell_value(csv, r, p));
            by[key].y.push_back(cell_value(csv, r, err));
        }
        Panel pan{"p", "e_L2 [%]", true, {}};
        for (const auto& k : order) pan.series.push_back(by[k]);
        panels.push_back(std::move(pan));
    } else if (csv.header[0] == "variant") {
        // One row per variant, columns p1, p2, ...
        Panel pan{"p", "", false, {}};
        std::vector<double> xs;
        for (std::size_t c = 1; c < csv.header.size(); ++c) {
            bool ok = false;
            const std::string h = csv.header[c];
            const double v = parse_num(h.size() > 1 && h[0] == 'p' ? h.substr(1) : h, ok);
            if (!ok) throw std::invalid_argument("plot: column '" + h + "' is not of the form p<n>");
            xs.push_back(v);
        }
        for (std::size_t r = 0; r < csv.rows.size(); ++r) {
            Series s{csv.rows[r].at(0), xs, {}};
            for (std::size_t c = 1; c < csv.header.size(); ++c) s.y.push_back(cell_value(csv, r, static_cast<int>(c)));
            pan.series.push_back(std::move(s));
        }
        pan.log_y = wide_positive(pan);
        panels.push_back(std::move(pan));
    } else {
        Panel pan{csv.header[0], "", false, {}};
        for (std::size_t c = 1; c < csv.header.size(); ++c) {
            Series s{csv.header[c], {}, {}};
            for (std::size_t r = 0; r < csv.rows.size(); ++r) {
                s.x.push_back(cell_value(csv, r, 0));
                s.y.push_back(cell_value(csv, r, static_cast<int>(c)));
            }
            pan.series.push_back(std::move(s));
        }
        pan.log_y = wide_positive(pan);
        panels.push_back(std::move(pan));
    }

    const double width = 720.0, panel_h = 280.0, head = title.empty() ? 0.0 : 28.0;
    const double height = head + panel_h * panels.size();
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(width) << "\" height=\"" << px(height)
        << "\" viewBox=\"0 0 " << px(width) << " " << px(height) << "\" font-family=\"sans-serif\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!title.empty())
        svg << "<text x=\"" << px(width / 2) << "\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">" << escape(title)
            << "</text>\n";
    for (std::size_t i = 0; i < panels.size(); ++i) draw_panel(svg, panels[i], head + panel_h * i, width, panel_h);
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace scm::cli
