"""Max-flow feasibility with vertex demands, box flows, theta flows and their audits."""

from .graph import (DemandProblem, DirectedGraph, Flow, FlowError, Infeasible, check_demand_flow,
                    cut_capacity, cut_condition_holds, divergence, feasible_flow, outside_demand)
from .decompose import cancel_cycles, path_decomposition, reconstruct
from .boxes import (BoxFlowSpec, ConnectorFamily, GeometryError, Theta, ThetaSpec,
                    audit_connectors, box_ring, box_sites, build_theta, connector_paths,
                    default_radius, kappa_i, merged_box_graph, sink_box_flow, source_box_flow)
from .certificate import CertificateReport, flow_from_json, flow_to_json, verify_flow_certificate

__all__ = [
    "DemandProblem", "DirectedGraph", "Flow", "FlowError", "Infeasible", "check_demand_flow",
    "cut_capacity", "cut_condition_holds", "divergence", "feasible_flow", "outside_demand",
    "cancel_cycles", "path_decomposition", "reconstruct",
    "BoxFlowSpec", "ConnectorFamily", "GeometryError", "Theta", "ThetaSpec", "audit_connectors",
    "box_ring", "box_sites", "build_theta", "connector_paths", "default_radius", "kappa_i",
    "merged_box_graph", "sink_box_flow", "source_box_flow",
    "CertificateReport", "flow_from_json", "flow_to_json", "verify_flow_certificate",
]
