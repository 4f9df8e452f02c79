#pragma once

// Standalone SVG line and dot plots. Purely presentational.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "lbd/error.hpp"

namespace lbd::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "black";
    bool dashed = false;
    bool dots = false;    ///< markers instead of a line
    bool steps = false;   ///< staircase (hold value until the next x)
};

class Plot {
public:
    Plot(std::string title, std::string xlabel, std::string ylabel)
        : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

    void add(Series s) {
        if (s.x.size() != s.y.size()) throw ConfigError("plot: series '" + s.label + "' has mismatched lengths");
        if (s.x.empty()) throw ConfigError("plot: series '" + s.label + "' is empty");
        series_.push_back(std::move(s));
    }

    void set_xrange(double lo, double hi) { xr_ = {lo, hi, true}; }
    void set_yrange(double lo, double hi) { yr_ = {lo, hi, true}; }

    std::string render(int width = 640, int height = 440) const {
        if (series_.empty()) throw ConfigError("plot: nothing to draw");
        Range xr = xr_, yr = yr_;
        if (!xr.fixed) xr = extent(true);
        if (!yr.fixed) yr = extent(false);
        const double L = 70, R = 20, T = 40, B = 55;
        const double pw = width - L - R, ph = height - T - B;
        auto X = [&](double x) { return L + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
        auto Y = [&](double y) { return T + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

        std::string s;
        s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
             "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
        s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        s += "<text x=\"" + num(width / 2.0) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + esc(title_) +
             "</text>\n";
        s += "<rect x=\"" + num(L) + "\" y=\"" + num(T) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
             "\" fill=\"none\" stroke=\"#444\"/>\n";
        for (int i = 0; i <= 5; ++i) {
            const double xv = xr.lo + (xr.hi - xr.lo) * i / 5.0, yv = yr.lo + (yr.hi - yr.lo) * i / 5.0;
            s += "<line x1=\"" + num(X(xv)) + "\" y1=\"" + num(T + ph) + "\" x2=\"" + num(X(xv)) + "\" y2=\"" +
                 num(T + ph + 5) + "\" stroke=\"#444\"/>\n";
            s += "<text x=\"" + num(X(xv)) + "\" y=\"" + num(T + ph + 18) + "\" text-anchor=\"middle\">" + tick(xv) +
                 "</text>\n";
            s += "<line x1=\"" + num(L - 5) + "\" y1=\"" + num(Y(yv)) + "\" x2=\"" + num(L) + "\" y2=\"" + num(Y(yv)) +
                 "\" stroke=\"#444\"/>\n";
            s += "<text x=\"" + num(L - 8) + "\" y=\"" + num(Y(yv) + 4) + "\" text-anchor=\"end\">" + tick(yv) +
                 "</text>\n";
        }
        s += "<text x=\"" + num(L + pw / 2) + "\" y=\"" + num(height - 12.0) + "\" text-anchor=\"middle\">" +
             esc(xlabel_) + "</text>\n";
        s += "<text x=\"16\" y=\"" + num(T + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
             num(T + ph / 2) + ")\">" + esc(ylabel_) + "</text>\n";

        for (const auto& se : series_) {
            if (se.dots) {
                for (std::size_t i = 0; i < se.x.size(); ++i)
                    s += "<circle cx=\"" + num(X(se.x[i])) + "\" cy=\"" + num(Y(se.y[i])) + "\" r=\"4\" fill=\"" +
                         se.color + "\"/>\n";
                continue;
            }
            std::string pts;
            for (std::size_t i = 0; i < se.x.size(); ++i) {
                if (se.steps && i > 0) pts += num(X(se.x[i])) + "," + num(Y(se.y[i - 1])) + " ";
                pts += num(X(se.x[i])) + "," + num(Y(se.y[i])) + " ";
            }
            s += "<polyline fill=\"none\" stroke=\"" + se.color + "\" stroke-width=\"1.6\"" +
                 (se.dashed ? " stroke-dasharray=\"6,4\"" : "") + " points=\"" + pts + "\"/>\n";
        }
        double ly = T + 14;
        for (const auto& se : series_) {
            if (se.label.empty()) continue;
            const double lx = L + pw - 150;
            if (se.dots)
                s += "<circle cx=\"" + num(lx + 10) + "\" cy=\"" + num(ly - 4) + "\" r=\"4\" fill=\"" + se.color + "\"/>\n";
            else
                s += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" + num(lx + 20) + "\" y2=\"" +
                     num(ly - 4) + "\" stroke=\"" + se.color + "\" stroke-width=\"1.6\"" +
                     (se.dashed ? " stroke-dasharray=\"6,4\"" : "") + "/>\n";
            s += "<text x=\"" + num(lx + 26) + "\" y=\"" + num(ly) + "\">" + esc(se.label) + "</text>\n";
            ly += 16;
        }
        s += "</svg>\n";
        return s;
    }

private:
    struct Range {
        double lo = 0, hi = 1;
        bool fixed = false;
    };

    Range extent(bool xaxis) const {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& se : series_)
            for (double v : xaxis ? se.x : se.y)
                if (std::isfinite(v)) {
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
        if (!std::isfinite(lo)) return {0, 1, false};
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double pad = 0.04 * (hi - lo);
        return {lo - pad, hi + pad, false};
    }

    static std::string num(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return buf;
    }

    static std::string tick(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
        return buf;
    }

    static std::string esc(const std::string& in) {
        std::string out;
        for (char c : in) {
            if (c == '<') out += "&lt;";
            else if (c == '>') out += "&gt;";
            else if (c == '&') out += "&amp;";
            else out += c;
        }
        return out;
    }

    std::string title_, xlabel_, ylabel_;
    std::vector<Series> series_;
    Range xr_, yr_;
};

}  // namespace lbd::svg
