#pragma once

// Tiny JSON emitter for result objects. Floats go out with 17 significant
// digits so every double round-trips.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>

namespace maxsprt {

class JsonWriter {
public:
    JsonWriter& begin_object() { return open('{'); }
    JsonWriter& end_object() { return close('}'); }
    JsonWriter& begin_array() { return open('['); }
    JsonWriter& end_array() { return close(']'); }

    JsonWriter& key(const std::string& k) {
        sep();
        write_string(k);
        os_ << ':';
        fresh_ = true;
        return *this;
    }

    JsonWriter& value(double v) {
        sep();
        if (!std::isfinite(v)) {
            os_ << "null";
            return *this;
        }
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os_ << buf;
        return *this;
    }
    JsonWriter& value(std::int64_t v) {
        sep();
        os_ << v;
        return *this;
    }
    JsonWriter& value(bool v) {
        sep();
        os_ << (v ? "true" : "false");
        return *this;
    }
    JsonWriter& value(const std::string& v) {
        sep();
        write_string(v);
        return *this;
    }
    JsonWriter& value(const char* v) { return value(std::string(v)); }
    JsonWriter& null() {
        sep();
        os_ << "null";
        return *this;
    }

    std::string str() const { return os_.str(); }

private:
    JsonWriter& open(char c) {
        sep();
        os_ << c;
        fresh_ = true;
        return *this;
    }
    JsonWriter& close(char c) {
        os_ << c;
        fresh_ = false;
        return *this;
    }
    void sep() {
        if (!fresh_) os_ << ',';
        fresh_ = false;
    }
    void write_string(const std::string& s) {
        os_ << '"';
        for (char c : s) {
            switch (c) {
                case '"': os_ << "\\\""; break;
                case '\\': os_ << "\\\\"; break;
                case '\n': os_ << "\\n"; break;
                case '\r': os_ << "\\r"; break;
                case '\t': os_ << "\\t"; break;
                default: os_ << c;
            }
        }
        os_ << '"';
    }

    std::ostringstream os_;
    bool fresh_ = true;
};

} // namespace maxsprt
