"""Regenerates data/mini-corpus.

Fifty schemas spread over the five tiers, plus a key-reordered duplicate and
an empty schema that ingestion must drop. _labels.json holds the field count
and tier of every kept schema, counted here with a plain recursive walk;
_metadata.json maps ids to dataset names.
"""
import json
import os
import shutil

OUT = "data/mini-corpus"


def obj(props, required=(), closed=False, **extra):
    s = {"type": "object", "properties": props}
    if required:
        s["required"] = list(required)
    if closed:
        s["additionalProperties"] = False
    s.update(extra)
    return s


def fn(name, desc, props, required=()):
    """Function-calling style parameter schema."""
    return {"title": name, "description": desc, **obj(props, required)}


S = {"type": "string"}
I = {"type": "integer"}
N = {"type": "number"}
B = {"type": "boolean"}

schemas = {}

# trivial
schemas["t01-flag"] = {"type": "boolean"}
schemas["t02-count"] = {"type": "integer", "minimum": 0, "maximum": 100}
schemas["t03-status"] = {"enum": ["active", "inactive", "pending"]}
schemas["t04-name"] = obj({"name": S}, ["name"])
schemas["t05-point"] = obj({"x": I, "y": I}, ["x", "y"], closed=True)
schemas["t06-tags"] = {"type": "array", "items": S, "maxItems": 4}
schemas["t07-version"] = {"type": "string", "pattern": "^[0-9]+\\.[0-9]+\\.[0-9]+$"}
schemas["t08-nullable"] = {"type": ["string", "null"], "maxLength": 12}
schemas["t09-const"] = {"const": {"kind": "ping"}}
schemas["t10-date"] = {"type": "string", "format": "date"}
schemas["t11-pair"] = {"type": "array", "prefixItems": [S, I], "items": False}
schemas["t12-email"] = obj({"email": {"type": "string", "format": "email"}}, ["email"])

# easy
schemas["e01-weather"] = fn(
    "get_weather",
    "Current weather for a city",
    {"city": S, "unit": {"enum": ["celsius", "fahrenheit"]}},
    ["city"],
)
schemas["e02-booking"] = fn(
    "book_table",
    "Reserve a restaurant table",
    {"restaurant": S, "date": {"type": "string", "format": "date"}, "party": {"type": "integer", "minimum": 1, "maximum": 20}},
    ["restaurant", "date", "party"],
)
schemas["e03-convert"] = fn(
    "convert_currency",
    "Convert an amount between currencies",
    {"amount": N, "from": {"type": "string", "pattern": "^[A-Z]{3}$"}, "to": {"type": "string", "pattern": "^[A-Z]{3}$"}},
    ["amount", "from", "to"],
)
schemas["e04-person"] = obj(
    {"first": S, "last": S, "age": {"type": "integer", "minimum": 0, "maximum": 150}, "email": {"type": "string", "format": "email"}},
    ["first", "last"],
    closed=True,
)
schemas["e05-address"] = obj(
    {"street": S, "city": S, "zip": {"type": "string", "pattern": "^[0-9]{5}$"}, "country": {"enum": ["US", "CA", "MX"]}},
    ["street", "city", "country"],
)
schemas["e06-list"] = {
    "type": "array",
    "minItems": 1,
    "maxItems": 3,
    "items": obj({"id": I, "label": {"type": "string", "minLength": 1, "maxLength": 10}}, ["id", "label"], closed=True),
}
schemas["e07-shape"] = {
    "oneOf": [
        obj({"kind": {"const": "circle"}, "r": I}, ["kind", "r"], closed=True),
        obj({"kind": {"const": "square"}, "side": I}, ["kind", "side"], closed=True),
    ]
}
schemas["e08-search"] = fn(
    "search_products",
    "Search the catalogue",
    {"query": S, "limit": {"type": "integer", "minimum": 1, "maximum": 50}, "in_stock": B},
    ["query"],
)
schemas["e09-event"] = obj(
    {"id": {"type": "string", "format": "uuid"}, "at": {"type": "string", "format": "date-time"}, "level": {"enum": ["info", "warn", "error"]}},
    ["id", "at", "level"],
    closed=True,
)
schemas["e10-range"] = obj({"lo": I, "hi": I, "step": {"type": "integer", "multipleOf": 2}}, ["lo", "hi"], minProperties=2, maxProperties=3)
schemas["e11-env"] = {
    "type": "object",
    "patternProperties": {"^[A-Z_]+$": S},
    "additionalProperties": False,
    "maxProperties": 4,
}
schemas["e12-ref"] = {
    "$defs": {"id": {"type": "integer", "minimum": 1}},
    "type": "object",
    "properties": {"owner": {"$ref": "#/$defs/id"}, "group": {"$ref": "#/$defs/id"}},
    "required": ["owner"],
}
schemas["e13-host"] = obj(
    {"host": {"type": "string", "format": "ipv4"}, "port": {"type": "integer", "minimum": 1, "maximum": 65535}, "tls": B},
    ["host", "port"],
    dependentRequired={"tls": ["port"]},
)
schemas["e14-todo"] = fn(
    "add_todo",
    "Add an item to a list",
    {"title": {"type": "string", "maxLength": 40}, "due": {"type": "string", "format": "date"}, "priority": {"enum": [1, 2, 3]}},
    ["title"],
)

# medium
schemas["m01-order"] = obj(
    {
        "order_id": {"type": "string", "pattern": "^ORD-[0-9]{6}$"},
        "customer": obj({"name": S, "email": {"type": "string", "format": "email"}}, ["name"], closed=True),
        "items": {
            "type": "array",
            "minItems": 1,
            "maxItems": 5,
            "items": obj({"sku": S, "qty": {"type": "integer", "minimum": 1, "maximum": 99}}, ["sku", "qty"], closed=True),
        },
        "status": {"enum": ["new", "paid", "shipped"]},
    },
    ["order_id", "customer", "items"],
    closed=True,
)
schemas["m02-tree"] = {
    "$defs": {
        "node": {
            "type": "object",
            "properties": {"value": I, "children": {"type": "array", "maxItems": 2, "items": {"$ref": "#/$defs/node"}}},
            "required": ["value"],
            "additionalProperties": False,
        }
    },
    "$ref": "#/$defs/node",
}
schemas["m03-meeting"] = fn(
    "schedule_meeting",
    "Put a meeting on the shared calendar",
    {
        "title": {"type": "string", "minLength": 1, "maxLength": 60},
        "start": {"type": "string", "format": "date-time"},
        "duration_minutes": {"type": "integer", "minimum": 15, "maximum": 480, "multipleOf": 15},
        "attendees": {"type": "array", "items": {"type": "string", "format": "email"}, "maxItems": 6},
        "room": {"anyOf": [S, {"type": "null"}]},
        "recurring": B,
    },
    ["title", "start", "duration_minutes"],
)
schemas["m04-log"] = obj(
    {
        "ts": {"type": "string", "format": "date-time"},
        "service": {"enum": ["api", "worker", "scheduler", "gateway"]},
        "level": {"enum": ["debug", "info", "warn", "error"]},
        "message": {"type": "string", "maxLength": 200},
        "trace": {"type": "string", "pattern": "^[0-9a-f]{16}$"},
        "attrs": {"type": "object", "additionalProperties": {"type": ["string", "integer", "boolean"]}, "maxProperties": 5},
        "host": {"type": "string", "format": "ipv6"},
    },
    ["ts", "service", "level", "message"],
    closed=True,
)
schemas["m05-payment"] = {
    "type": "object",
    "properties": {
        "amount": {"type": "integer", "minimum": 1},
        "currency": {"enum": ["USD", "EUR", "GBP", "JPY"]},
        "method": {
            "oneOf": [
                obj({"type": {"const": "card"}, "last4": {"type": "string", "pattern": "^[0-9]{4}$"}}, ["type", "last4"], closed=True),
                obj({"type": {"const": "bank"}, "iban": {"type": "string", "minLength": 15, "maxLength": 34}}, ["type", "iban"], closed=True),
                obj({"type": {"const": "wallet"}, "provider": {"enum": ["apple", "google"]}}, ["type", "provider"], closed=True),
            ]
        },
    },
    "required": ["amount", "currency", "method"],
    "additionalProperties": False,
}
schemas["m06-user"] = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "definitions": {
        "phone": {"type": "string", "pattern": "^\\+[0-9]{7,12}$"},
        "address": obj({"line1": S, "city": S, "postcode": S}, ["line1", "city"], closed=True),
    },
    **obj(
        {
            "id": {"type": "string", "format": "uuid"},
            "username": {"type": "string", "pattern": "^[a-z][a-z0-9_]{2,15}$"},
            "phones": {"type": "array", "items": {"$ref": "#/definitions/phone"}, "maxItems": 3},
            "home": {"$ref": "#/definitions/address"},
            "work": {"$ref": "#/definitions/address"},
            "admin": B,
        },
        ["id", "username"],
        closed=True,
    ),
}
schemas["m07-matrix"] = obj(
    {
        "rows": {"type": "integer", "minimum": 1, "maximum": 3},
        "cols": {"type": "integer", "minimum": 1, "maximum": 3},
        "data": {"type": "array", "maxItems": 3, "items": {"type": "array", "maxItems": 3, "items": N}},
        "name": {"type": "string", "maxLength": 16},
        "dtype": {"enum": ["f32", "f64", "i32"]},
    },
    ["rows", "cols", "data"],
    closed=True,
)
schemas["m08-flight"] = fn(
    "search_flights",
    "Find flights between two airports",
    {
        "origin": {"type": "string", "pattern": "^[A-Z]{3}$"},
        "destination": {"type": "string", "pattern": "^[A-Z]{3}$"},
        "depart": {"type": "string", "format": "date"},
        "return": {"type": "string", "format": "date"},
        "passengers": obj({"adults": {"type": "integer", "minimum": 1, "maximum": 9}, "children": {"type": "integer", "minimum": 0, "maximum": 9}}, ["adults"], closed=True),
        "cabin": {"enum": ["economy", "premium", "business", "first"]},
        "nonstop": B,
    },
    ["origin", "destination", "depart", "passengers"],
)
schemas["m09-feature-flags"] = {
    "type": "object",
    "propertyNames": {"pattern": "^[a-z][a-z_]*$", "maxLength": 20},
    "additionalProperties": {
        "type": "object",
        "properties": {"enabled": B, "rollout": {"type": "integer", "minimum": 0, "maximum": 100}, "owner": S},
        "required": ["enabled"],
        "additionalProperties": False,
    },
    "maxProperties": 3,
}
schemas["m10-invoice"] = obj(
    {
        "number": {"type": "integer", "minimum": 1000},
        "issued": {"type": "string", "format": "date"},
        "lines": {
            "type": "array",
            "minItems": 1,
            "maxItems": 4,
            "items": obj(
                {"text": {"type": "string", "maxLength": 30}, "cents": {"type": "integer", "minimum": 0}, "tax": {"enum": [0, 5, 20]}},
                ["text", "cents"],
                closed=True,
            ),
        },
        "paid": B,
        "notes": {"type": ["string", "null"]},
    },
    ["number", "issued", "lines"],
    closed=True,
)
schemas["m11-geo"] = {
    "anyOf": [
        obj({"type": {"const": "Point"}, "coordinates": {"type": "array", "prefixItems": [N, N], "items": False, "minItems": 2}}, ["type", "coordinates"], closed=True),
        obj(
            {"type": {"const": "LineString"}, "coordinates": {"type": "array", "minItems": 2, "maxItems": 4, "items": {"type": "array", "prefixItems": [N, N], "items": False, "minItems": 2}}},
            ["type", "coordinates"],
            closed=True,
        ),
    ]
}
schemas["m12-release"] = {
    "$schema": "http://json-schema.org/draft-04/schema#",
    "type": "object",
    "properties": {
        "name": {"type": "string", "pattern": "^[a-z0-9-]+$"},
        "version": {"type": "string", "pattern": "^v[0-9]+\\.[0-9]+\\.[0-9]+$"},
        "channels": {"type": "array", "items": {"enum": ["stable", "beta", "nightly"]}, "maxItems": 3},
        "artifacts": {
            "type": "array",
            "maxItems": 3,
            "items": {
                "type": "object",
                "properties": {"os": {"enum": ["linux", "macos", "windows"]}, "arch": {"enum": ["x86_64", "aarch64"]}, "sha": {"type": "string", "pattern": "^[0-9a-f]{8}$"}},
                "required": ["os", "arch"],
                "additionalProperties": False,
            },
        },
        "yanked": B,
    },
    "required": ["name", "version"],
    "additionalProperties": False,
}


def block(prefix, n, required_every=4):
    props = {}
    required = []
    kinds = [
        {"type": "string", "maxLength": 24},
        {"type": "integer", "minimum": 0, "maximum": 1000},
        B,
        {"enum": ["low", "mid", "high"]},
        {"type": "string", "format": "date"},
    ]
    for i in range(n):
        name = f"{prefix}_{i:02d}"
        props[name] = dict(kinds[i % len(kinds)])
        if i % required_every == 0:
            required.append(name)
    return obj(props, required, closed=True)


# hard
schemas["h01-service-config"] = obj(
    {
        "service": obj({"name": S, "replicas": {"type": "integer", "minimum": 1, "maximum": 10}, "image": {"type": "string", "pattern": "^[a-z0-9./-]+:[a-z0-9.]+$"}}, ["name", "image"], closed=True),
        "resources": obj({"cpu": {"type": "integer", "minimum": 1, "maximum": 64}, "memory_mb": {"type": "integer", "minimum": 64, "maximum": 65536}}, ["cpu"], closed=True),
        "env": block("env", 12),
        "probes": obj({"path": {"type": "string", "pattern": "^/[a-z/]*$"}, "period": {"type": "integer", "minimum": 1, "maximum": 60}}, ["path"], closed=True),
        "ports": {"type": "array", "maxItems": 4, "items": obj({"port": {"type": "integer", "minimum": 1, "maximum": 65535}, "proto": {"enum": ["tcp", "udp"]}}, ["port"], closed=True)},
    },
    ["service"],
    closed=True,
)
schemas["h02-survey"] = obj({f"q{i:02d}": {"enum": [1, 2, 3, 4, 5]} for i in range(36)}, [f"q{i:02d}" for i in range(0, 36, 6)], closed=True)
schemas["h03-inventory"] = obj(
    {"warehouse": S, "updated": {"type": "string", "format": "date-time"}, "stock": block("sku", 30), "limits": block("lim", 10)},
    ["warehouse", "stock"],
    closed=True,
)
schemas["h04-profile"] = {
    "$defs": {
        "contact": obj({"kind": {"enum": ["email", "phone"]}, "value": {"type": "string", "maxLength": 40}}, ["kind", "value"], closed=True),
        "period": obj({"from": {"type": "string", "format": "date"}, "to": {"type": "string", "format": "date"}}, ["from"], closed=True),
    },
    **obj(
        {
            "name": S,
            "contacts": {"type": "array", "maxItems": 3, "items": {"$ref": "#/$defs/contact"}},
            "jobs": {"type": "array", "maxItems": 3, "items": obj({"employer": S, "title": S, "when": {"$ref": "#/$defs/period"}}, ["employer"], closed=True)},
            "education": {"type": "array", "maxItems": 2, "items": obj({"school": S, "degree": {"enum": ["bsc", "msc", "phd"]}, "when": {"$ref": "#/$defs/period"}}, ["school"], closed=True)},
            "skills": block("skill", 24, 8),
        },
        ["name"],
        closed=True,
    ),
}
schemas["h05-telemetry"] = obj({f"sensor_{i:02d}": obj({"value": N, "unit": {"enum": ["C", "K", "Pa"]}, "ok": B}, ["value"], closed=True) for i in range(16)}, closed=True)
schemas["h06-form"] = obj({"page1": block("a", 20), "page2": block("b", 20), "page3": block("c", 20), "submit": B}, ["page1"], closed=True)
schemas["h07-pipeline"] = {
    "type": "object",
    "properties": {
        "stages": {
            "type": "array",
            "minItems": 1,
            "maxItems": 4,
            "items": {
                "oneOf": [
                    obj({"op": {"const": "read"}, "path": S, "format": {"enum": ["csv", "json", "parquet"]}}, ["op", "path"], closed=True),
                    obj({"op": {"const": "filter"}, "expr": {"type": "string", "maxLength": 50}}, ["op", "expr"], closed=True),
                    obj({"op": {"const": "map"}, "column": S, "fn": {"enum": ["upper", "lower", "trim", "len"]}}, ["op", "column", "fn"], closed=True),
                    obj({"op": {"const": "write"}, "path": S, "mode": {"enum": ["append", "overwrite"]}}, ["op", "path"], closed=True),
                ]
            },
        },
        "options": block("opt", 25, 25),
    },
    "required": ["stages"],
    "additionalProperties": False,
}
schemas["h08-catalog"] = obj({f"cat_{i}": block(f"f{i}", 9, 9) for i in range(6)}, closed=True)

# ultra
schemas["u01-wide-record"] = block("col", 180)
schemas["u02-nested-config"] = obj({f"module_{i:02d}": block(f"m{i}", 14, 7) for i in range(12)}, ["module_00"], closed=True)
schemas["u03-questionnaire"] = obj({f"section_{i}": obj({f"q{j:02d}": {"enum": ["yes", "no", "na"]} for j in range(30)}, closed=True) for i in range(8)}, closed=True)
schemas["u04-ledger"] = {
    "$defs": {"entry": block("e", 40, 10)},
    **obj({f"account_{i:02d}": {"type": "array", "maxItems": 2, "items": {"$ref": "#/$defs/entry"}} for i in range(60)}, closed=True),
}


def count(v):
    if isinstance(v, dict):
        return sum(1 + count(x) for x in v.values())
    if isinstance(v, list):
        return sum(count(x) for x in v)
    return 0


def tier(n):
    if n < 10:
        return "trivial"
    if n <= 30:
        return "easy"
    if n <= 100:
        return "medium"
    if n <= 500:
        return "hard"
    return "ultra"


def dataset(name):
    if name.split("-", 1)[1] in ("weather", "booking", "convert", "search", "todo", "meeting", "flight"):
        return "glaive"
    return "github"


def main():
    # Ids are numbered in authoring order; the tier is only in the labels.
    named = {f"{i + 1:02d}-{k.split('-', 1)[1]}": v for i, (k, v) in enumerate(schemas.items())}
    if os.path.isdir(OUT):
        shutil.rmtree(OUT)
    os.makedirs(OUT)
    labels = {}
    meta = {}
    for name, s in named.items():
        with open(f"{OUT}/{name}.json", "w") as f:
            json.dump(s, f, indent=2)
            f.write("\n")
        n = count(s)
        labels[name] = {"field_count": n, "tier": tier(n)}
        meta[name] = dataset(name)
    # Same as e05 with keys reordered everywhere; ingestion keeps e05.
    dup = json.loads(json.dumps(schemas["e05-address"]), object_pairs_hook=lambda kv: dict(reversed(kv)))
    with open(f"{OUT}/z-address-reordered.json", "w") as f:
        json.dump(dup, f)
        f.write("\n")
    with open(f"{OUT}/z-empty.json", "w") as f:
        f.write('{"title": "nothing to see", "description": "metadata only"}\n')
    with open(f"{OUT}/_labels.json", "w") as f:
        json.dump(labels, f, indent=1, sort_keys=True)
        f.write("\n")
    with open(f"{OUT}/_metadata.json", "w") as f:
        json.dump(meta, f, indent=1, sort_keys=True)
        f.write("\n")
    print(len(named), {t: sum(1 for l in labels.values() if l["tier"] == t) for t in ("trivial", "easy", "medium", "hard", "ultra")})


main()
