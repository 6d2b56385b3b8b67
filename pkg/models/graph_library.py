# models/graph_library.py

# 常用的典型图，供测试、命令行示例和锐利性族 (sharpness families) 使用

from models.metric_graph import MetricGraph


def tadpole_graph(loop: float = 2.0) -> MetricGraph:
    """蝌蚪图：一个自环加一条半直线，临界情形 (iii) 的代表。"""
    return MetricGraph.build(edges=[("loop", "v", "v", loop)], half_lines=[("h", "v")])


def fat_line_graph(core: float = 40.0) -> MetricGraph:
    """两条半直线由一条长度为 core 的有界边连接，近似整条实直线。"""
    return MetricGraph.build(edges=[("core", "a", "b", core)], half_lines=[("h1", "a"), ("h2", "b")])


def terminal_graph(core: float = 30.0) -> MetricGraph:
    """线段一端挂半直线，另一端是度为 1 的自由端，近似半直线 R+。"""
    return MetricGraph.build(edges=[("core", "a", "b", core)], half_lines=[("h", "a")])


def terminal_cycle_graph() -> MetricGraph:
    """带一条终端边的图：两条平行边组成的圈，两端各挂一条半直线，再挂一条悬挂边（情形 (i)）。"""
    return MetricGraph.build(
        edges=[("e1", "a", "b", 1.0), ("e2", "a", "b", 1.5), ("pendant", "b", "c", 1.0)],
        half_lines=[("h1", "a"), ("h2", "b")],
    )


def cycle_covering_graph() -> MetricGraph:
    """三角形紧核，两个顶点各挂一条半直线，每条边都在某个圈上（情形 (ii)）。"""
    return MetricGraph.build(
        edges=[("ab", "a", "b", 1.0), ("bc", "b", "c", 1.0), ("ca", "c", "a", 1.0)],
        half_lines=[("h1", "a"), ("h2", "b")],
    )


def signpost_graph(stem: float = 1.0, loop: float = 2.0) -> MetricGraph:
    """路标图：顶端自环，经茎 stem 连到底部顶点，底部挂两条半直线（情形 (iv)）。"""
    return MetricGraph.build(
        edges=[("loop", "top", "top", loop), ("stem", "top", "base", stem)],
        half_lines=[("h1", "base"), ("h2", "base")],
    )


def star_pendant_graph(pendant: float = 1.0) -> MetricGraph:
    """三条半直线的星图加一条悬挂有界边：只有一个悬挂点的树。"""
    return MetricGraph.build(
        edges=[("pendant", "o", "leaf", pendant)],
        half_lines=[("h1", "o"), ("h2", "o"), ("h3", "o")],
    )


# 四种临界情形的样例，顺序对应 (i)-(iv)
CRITICAL_ARCHETYPES = {
    "i": terminal_cycle_graph,
    "ii": cycle_covering_graph,
    "iii": tadpole_graph,
    "iv": signpost_graph,
}
