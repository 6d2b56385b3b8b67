# topology/bridges.py

from typing import Hashable, Iterable, List, Set, Tuple


def find_bridges(vertices: Iterable[Hashable], edges: List[Tuple[str, Hashable, Hashable]]) -> Set[str]:
    """
    多重图的桥（割边）查找：迭代 DFS + low-link，只跳过来时的那一条边（按边 id），
    因此平行边不会被误判为桥，自环永远不是桥。
    Args:
        vertices: 顶点集合。
        edges: (edge_id, u, v) 列表。
    Returns:
        Set[str]: 桥的 edge_id 集合。
    """
    adjacency = {v: [] for v in vertices}
    for eid, u, v in edges:
        adjacency[u].append((v, eid))
        if u != v:
            adjacency[v].append((u, eid))

    disc = {}
    low = {}
    bridges = set()
    timer = 0

    for start in adjacency:
        if start in disc:
            continue
        # 栈帧: (顶点, 来时的边 id, 下一个邻接下标)
        stack = [(start, None, 0)]
        while stack:
            u, parent_edge, i = stack.pop()
            if i == 0:
                disc[u] = low[u] = timer
                timer += 1
            else:
                # 从子节点返回，adjacency[u][i-1] 是树边
                child, eid = adjacency[u][i - 1]
                low[u] = min(low[u], low[child])
                if low[child] > disc[u]:
                    bridges.add(eid)

            while i < len(adjacency[u]):
                v, eid = adjacency[u][i]
                i += 1
                if eid == parent_edge:
                    continue
                if v in disc:
                    low[u] = min(low[u], disc[v]) # 回边或平行边
                    continue
                stack.append((u, parent_edge, i))
                stack.append((v, eid, 0))
                break
    return bridges
