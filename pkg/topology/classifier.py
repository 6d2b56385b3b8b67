# topology/classifier.py

import logging

import networkx as nx

from models.metric_graph import MetricGraph
from models.reports import CycleCovering, TopologyReport
from topology.bridges import find_bridges

logger = logging.getLogger(__name__)

# G∞ 中代表无穷远点的附加顶点；以不可能出现在文档中的名字命名
INFINITY = "<infinity>"


def has_terminal_edge(g: MetricGraph) -> bool:
    """是否存在一条有界边，其某个端点的总度数为 1。"""
    return bool(pendant_edges(g))


def pendant_edges(g: MetricGraph):
    """悬挂边：与度为 1 的顶点相连的有界边。半直线没有自由端，不计入。"""
    degree = g.degrees
    return [e.name for e in g.bounded_edges
            if not e.is_loop and (degree[e.v1] == 1 or degree[e.v2] == 1)]


def core_bridges(g: MetricGraph):
    """紧核（有界子图）中的割边。"""
    return find_bridges(g.vertices, [(e.name, e.v1, e.v2) for e in g.bounded_edges])


def admits_cycle_covering(g: MetricGraph) -> CycleCovering:
    """
    在 G 上加一个无穷远顶点，把每条半直线看作连向它的一条边得到 G∞；
    一条边位于（允许经过无穷远点的）圈上当且仅当它不是 G∞ 的桥。
    Returns:
        CycleCovering: covered 为真时 tags 标出每条边是在紧核圈上 ('core-cycle')
        还是只经过无穷远点 ('through-infinity')；否则 bridge 为字典序最小的桥。
    """
    edges = [(e.name, e.v1, e.v2) for e in g.bounded_edges]
    edges += [(h.name, h.vertex, INFINITY) for h in g.half_lines]
    bridges = find_bridges(list(g.vertices) + [INFINITY], edges)
    if bridges:
        blocking = sorted(bridges)[0]
        logger.debug(f"G∞ 的桥: {sorted(bridges)}，不存在圈覆盖")
        return CycleCovering(covered=False, bridge=blocking)

    in_core_cycle = core_bridges(g)
    tags = {e.name: ('through-infinity' if e.name in in_core_cycle else 'core-cycle') for e in g.bounded_edges}
    tags.update({h.name: 'through-infinity' for h in g.half_lines})
    return CycleCovering(covered=True, bridge=None, tags=tags)


def is_tree(g: MetricGraph) -> bool:
    """紧核（连同所有顶点）是树：连通且无圈（自环、平行边都算圈）。"""
    return nx.is_tree(g.multigraph)


def classify_topology(g: MetricGraph) -> TopologyReport:
    """汇总定理所需的全部拓扑量。"""
    covering = admits_cycle_covering(g)
    pendants = pendant_edges(g)
    report = TopologyReport(
        n_halflines=g.n_halflines,
        core_length=g.core_length,
        has_terminal_edge=bool(pendants),
        admits_cycle_covering=covering.covered,
        is_tree=is_tree(g),
        n_pendants=len(pendants),
        cut_edges=tuple(sorted(core_bridges(g))),
        covering_witness=covering.bridge,
    )
    logger.info(f"拓扑分类: N={report.n_halflines}, 终端边={report.has_terminal_edge}, "
                f"圈覆盖={report.admits_cycle_covering}, 树={report.is_tree}")
    return report
