#!/usr/bin/env python3
"""Writes the bundled Astronomy Shop model: environment, codebook and the two scenarios."""

import argparse
import json
from pathlib import Path

NAMESPACE = "otel-demo"

# service -> (type, team)
SERVICES = {
    "accounting": ("fulfillment_service", "finance"),
    "ad": ("service", "catalog"),
    "cart": ("service", "checkout"),
    "checkout": ("service", "checkout"),
    "currency": ("service", "catalog"),
    "email": ("service", "fulfillment"),
    "flagd": ("feature_flag", "platform"),
    "flagd-ui": ("service", "platform"),
    "fraud-detection": ("service", "finance"),
    "frontend": ("frontend", "web"),
    "frontend-proxy": ("frontend", "web"),
    "image-provider": ("service", "web"),
    "kafka": ("message_broker", "platform"),
    "load-generator": ("service", "platform"),
    "opensearch": ("search", "platform"),
    "otel-collector": ("service", "platform"),
    "payment": ("payment_service", "payments"),
    "postgresql": ("database", "platform"),
    "product-catalog": ("service", "catalog"),
    "product-reviews": ("service", "catalog"),
    "quote": ("service", "fulfillment"),
    "recommendation": ("service", "catalog"),
    "shipping": ("fulfillment_service", "fulfillment"),
    "valkey-cart": ("cache", "checkout"),
}

# caller -> callees. Kafka traffic is drawn as calls from producer and
# consumers to the broker, and the order event as a call from checkout to its
# consumers.
CALLS = {
    "load-generator": ["frontend-proxy"],
    "frontend-proxy": ["flagd-ui", "frontend", "image-provider"],
    "frontend": ["ad", "cart", "checkout", "currency", "product-catalog", "product-reviews",
                 "recommendation", "shipping"],
    "checkout": ["accounting", "cart", "currency", "email", "flagd", "fraud-detection", "kafka",
                 "payment", "product-catalog", "shipping"],
    "cart": ["flagd", "valkey-cart"],
    "payment": ["flagd"],
    "recommendation": ["flagd", "product-catalog"],
    "product-catalog": ["flagd", "postgresql"],
    "product-reviews": ["postgresql", "product-catalog"],
    "ad": ["flagd"],
    "shipping": ["quote"],
    "accounting": ["kafka", "postgresql"],
    "fraud-detection": ["flagd", "kafka"],
    "flagd-ui": ["flagd"],
    "otel-collector": ["opensearch"],
}

NODES = ["node/worker-a", "node/worker-b", "node/worker-c"]
REPLICAS = {"payment": 2}

SERVICE_ATTRS = ["error_rate", "latency_p95_ms", "request_rate"]
STORE_ATTRS = ["availability", "latency_p95_ms"]

TYPES = {
    "service": SERVICE_ATTRS + ["orders_per_minute"],
    "payment_service": SERVICE_ATTRS + ["transaction_success_ratio"],
    "fulfillment_service": SERVICE_ATTRS + ["orders_per_minute"],
    "frontend": SERVICE_ATTRS,
    "database": STORE_ATTRS,
    "cache": STORE_ATTRS,
    "message_broker": STORE_ATTRS,
    "search": STORE_ATTRS,
    "feature_flag": STORE_ATTRS,
    "workload": ["ready_replicas_ratio"],
    "pod": ["restart_rate", "memory_utilization"],
    "node": ["cpu_utilization", "memory_utilization"],
}

UNITS = {
    "error_rate": "ratio",
    "latency_p95_ms": "ms",
    "request_rate": "rps",
    "orders_per_minute": "orders/min",
    "transaction_success_ratio": "ratio",
    "availability": "ratio",
    "ready_replicas_ratio": "ratio",
    "restart_rate": "restarts/h",
    "memory_utilization": "ratio",
    "cpu_utilization": "ratio",
}

BASELINES = {
    "error_rate": 0.002,
    "latency_p95_ms": 120.0,
    "request_rate": 40.0,
    "orders_per_minute": 30.0,
    "transaction_success_ratio": 0.99,
    "availability": 1.0,
    "ready_replicas_ratio": 1.0,
    "restart_rate": 0.0,
    "memory_utilization": 0.5,
    "cpu_utilization": 0.4,
}


def threshold(name, applies_to, attribute, op, value):
    return {"name": name, "applies_to": applies_to,
            "activation": {"kind": "threshold", "attribute": attribute, "op": op, "value": value}}


def cause(name, applies_to, symptoms, prior=0.01):
    return {"name": name, "applies_to": applies_to, "prior": prior,
            "symptoms": [{"symptom": s, "probability": p} for s, p in symptoms]}


def rule(rule_id, src, relation, traversal, dst, attenuation):
    return {"id": rule_id, "from": src, "relation": relation, "traversal": traversal, "to": dst,
            "attenuation": attenuation}


def codebook():
    symptoms = [
        threshold("high_error_rate", "service", "error_rate", ">", 0.05),
        threshold("high_latency", "service", "latency_p95_ms", ">", 1000.0),
        threshold("transaction_rejections", "payment_service", "transaction_success_ratio", "<", 0.5),
        threshold("payment_errors", "payment_service", "error_rate", ">", 0.05),
        threshold("order_intake_drop", "fulfillment_service", "orders_per_minute", "<", 1.0),
        threshold("fulfillment_errors", "fulfillment_service", "error_rate", ">", 0.05),
        {"name": "frontend_user_errors", "applies_to": "frontend", "activation": {"kind": "event"}},
        threshold("datastore_unavailable", "database", "availability", "<", 0.9),
        threshold("cache_unavailable", "cache", "availability", "<", 0.9),
        threshold("broker_unavailable", "message_broker", "availability", "<", 0.9),
        threshold("search_unavailable", "search", "availability", "<", 0.9),
        threshold("flag_eval_failures", "feature_flag", "availability", "<", 0.9),
        threshold("replicas_unavailable", "workload", "ready_replicas_ratio", "<", 0.5),
        threshold("pod_restarting", "pod", "restart_rate", ">", 3.0),
        threshold("node_pressure", "node", "memory_utilization", ">", 0.95),
    ]
    causes = [
        cause("code_defect_request_errors", "service", [("high_error_rate", 0.9)]),
        cause("resource_saturation", "service", [("high_latency", 0.8)]),
        cause("code_defect_transaction_rejection", "payment_service",
              [("transaction_rejections", 0.95), ("payment_errors", 0.9)]),
        cause("payment_provider_timeout", "payment_service", [("payment_errors", 0.7)]),
        cause("code_defect_fulfillment", "fulfillment_service", [("fulfillment_errors", 0.9)]),
        cause("order_consumer_stall", "fulfillment_service", [("order_intake_drop", 0.6)]),
        cause("frontend_regression", "frontend", [("frontend_user_errors", 0.9)]),
        cause("database_outage", "database", [("datastore_unavailable", 0.95)]),
        cause("cache_outage", "cache", [("cache_unavailable", 0.95)]),
        cause("broker_outage", "message_broker", [("broker_unavailable", 0.95)]),
        cause("search_outage", "search", [("search_unavailable", 0.95)]),
        cause("flag_misconfiguration", "feature_flag", [("flag_eval_failures", 0.9)]),
        cause("rollout_stuck", "workload", [("replicas_unavailable", 0.9)]),
        cause("pod_crashloop", "pod", [("pod_restarting", 0.9)]),
        cause("node_memory_pressure", "node", [("node_pressure", 0.95)]),
    ]
    rules = [
        rule("txn_rejections_to_callers", "transaction_rejections", "conn", "reverse", "high_error_rate", 0.9),
        rule("payment_errors_to_callers", "payment_errors", "conn", "reverse", "high_error_rate", 0.9),
        rule("errors_to_callers", "high_error_rate", "conn", "reverse", "high_error_rate", 0.8),
        rule("errors_stall_order_intake", "high_error_rate", "conn", "forward", "order_intake_drop", 0.85),
        rule("datastore_to_callers", "datastore_unavailable", "conn", "reverse", "high_error_rate", 0.9),
        rule("datastore_to_fulfillment", "datastore_unavailable", "conn", "reverse", "fulfillment_errors", 0.9),
        rule("cache_to_callers", "cache_unavailable", "conn", "reverse", "high_error_rate", 0.9),
        rule("broker_to_producers", "broker_unavailable", "conn", "reverse", "high_error_rate", 0.7),
        rule("broker_to_consumers", "broker_unavailable", "conn", "reverse", "order_intake_drop", 0.8),
        rule("flags_to_callers", "flag_eval_failures", "conn", "reverse", "high_error_rate", 0.5),
        rule("flags_to_payment", "flag_eval_failures", "conn", "reverse", "payment_errors", 0.5),
        rule("pod_to_workload", "pod_restarting", "comp", "reverse", "replicas_unavailable", 0.8),
        rule("workload_to_service", "replicas_unavailable", "layer", "reverse", "high_error_rate", 0.9),
        rule("workload_to_payment", "replicas_unavailable", "layer", "reverse", "payment_errors", 0.9),
        rule("workload_to_fulfillment", "replicas_unavailable", "layer", "reverse", "fulfillment_errors", 0.9),
        rule("node_to_pods", "node_pressure", "layer", "reverse", "pod_restarting", 0.6),
    ]
    return {
        "schema": "codebook/1",
        "version": "astronomy-shop-1",
        "types": [{"name": name, "attributes": attrs} for name, attrs in TYPES.items()],
        "root_causes": causes,
        "symptoms": symptoms,
        "propagation_rules": rules,
    }


def attribute(entity, name):
    return {"entity": entity, "name": name, "unit": UNITS[name], "value": BASELINES[name],
            "baseline": BASELINES[name]}


def environment():
    entities, relations, attributes, deps = [], [], [], []
    node_index = 0
    for node in NODES:
        entities.append({"id": node, "name": node.split("/")[1], "type": "node", "team": "platform",
                         "metadata": {"namespace": NAMESPACE, "category": "node"}})
        attributes += [attribute(node, a) for a in TYPES["node"]]

    for service, (type_name, team) in SERVICES.items():
        meta = {"namespace": NAMESPACE, "category": "service"}
        entities.append({"id": service, "name": service, "type": type_name, "team": team, "metadata": meta})
        attrs = TYPES[type_name]
        if type_name == "service":
            attrs = [a for a in attrs if a != "orders_per_minute" or service == "checkout"]
        attributes += [attribute(service, a) for a in attrs]

        workload = "deploy/" + service
        entities.append({"id": workload, "name": service, "type": "workload", "team": team,
                         "metadata": {"namespace": NAMESPACE, "category": "workload"}})
        attributes.append(attribute(workload, "ready_replicas_ratio"))
        relations.append({"source": service, "target": workload, "kind": "layer"})
        for i in range(REPLICAS.get(service, 1)):
            pod = f"pod/{service}-{i}"
            entities.append({"id": pod, "name": f"{service}-{i}", "type": "pod", "team": team,
                             "metadata": {"namespace": NAMESPACE, "category": "pod"}})
            attributes += [attribute(pod, a) for a in TYPES["pod"]]
            relations.append({"source": workload, "target": pod, "kind": "comp"})
            relations.append({"source": pod, "target": NODES[node_index % len(NODES)], "kind": "layer"})
            node_index += 1

    for caller, callees in CALLS.items():
        for callee in callees:
            relations.append({"source": caller, "target": callee, "kind": "conn"})

    def dep(src, dst, function):
        deps.append({"from": src, "to": dst, "function": function})

    for callee in ["cart", "currency", "payment", "product-catalog"]:
        dep(f"{callee}:error_rate", "checkout:error_rate", {"kind": "max"})
    dep("payment:transaction_success_ratio", "checkout:orders_per_minute", {"kind": "affine", "a": 30.0, "b": 0.0})
    for consumer in ["accounting", "shipping"]:
        dep("checkout:orders_per_minute", f"{consumer}:orders_per_minute", {"kind": "affine", "a": 1.0, "b": 0.0})
    # Derived values start from their evaluated baseline.
    for a in attributes:
        if a["entity"] == "checkout" and a["name"] == "orders_per_minute":
            a["value"] = a["baseline"] = 29.7
        if a["entity"] in ("accounting", "shipping") and a["name"] == "orders_per_minute":
            a["value"] = a["baseline"] = 29.7

    return {
        "schema": "env/1",
        "entities": entities,
        "relations": relations,
        "attributes": attributes,
        "attribute_dependencies": deps,
        "constraints": [{"attribute": "checkout:error_rate", "op": "<=", "bound": 0.05}],
    }


def query(qid, text, method, params=None):
    return {"id": qid, "text": text, "request": {"method": method, "params": params or {}}}


Q1 = "What's the current health of the otel-demo namespace? Are there any active incidents or issues?"
Q2 = ("I'm seeing CheckoutServiceHighRequestErrors in the otel-demo namespace. "
      "What services are impacted and how widespread is it?")
Q3 = "I'm seeing CheckoutServiceHighRequestErrors in the otel-demo namespace. What's the root cause?"
Q4 = "My team owns the payment service. We got paged about checkout errors, is this our fault?"
Q5 = "Is it safe to restart the payment pods, or is there a deeper issue we need to fix first?"
Q6 = "Checkout is down. Is this a single team issue or do multiple teams need to be involved?"


def scenarios():
    shared = {"schema": "scenario/1", "environment": "environment.json", "codebook": "codebook.json",
              "seed": 20240611, "baseline_ticks": 3, "jitter": 0.05}
    fault = dict(shared)
    fault.update({
        "name": "payment-fault",
        "mode": "active_fault",
        "fault": {
            "cause": "code_defect_transaction_rejection@payment",
            "ticks": 2,
            "overrides": [{"attribute": "payment:error_rate", "value": 1.0},
                          {"attribute": "payment:transaction_success_ratio", "value": 0.0}],
        },
        "expected": {
            "cause": "code_defect_transaction_rejection@payment",
            "downstream": ["accounting", "checkout", "shipping"],
            "aligned_targets": ["pod/payment-0", "pod/payment-1"],
            "misaligned_targets": ["checkout"],
        },
        "queries": [
            query("Q1", Q1, "get_environment_health"),
            query("Q2", Q2, "get_blast_radius"),
            query("Q3", Q3, "get_root_causes"),
            query("Q4", Q4, "get_root_causes", {"team": "payments"}),
            query("Q5", Q5, "check_remediation", {"targets": ["pod/payment-0", "pod/payment-1", "checkout"]}),
            query("Q6", Q6, "get_blast_radius"),
        ],
    })
    healthy = dict(shared)
    healthy.update({
        "name": "healthy-baseline",
        "mode": "healthy",
        "queries": [
            query("Q1", Q1, "get_environment_health"),
            query("Q2", Q2, "get_blast_radius"),
            query("Q3", Q3, "get_root_causes"),
        ],
    })
    return fault, healthy


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "astronomy_shop"))
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fault, healthy = scenarios()
    files = {
        "codebook.json": codebook(),
        "environment.json": environment(),
        "scenario_fault.json": fault,
        "scenario_healthy.json": healthy,
    }
    for name, doc in files.items():
        (out / name).write_text(json.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    main()
