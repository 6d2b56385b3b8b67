# config.py

# 全局默认参数。命令行参数和 --config 指定的 YAML 文件会覆盖这里的值。

# 离散化参数
# H_STEP 为目标网格步长 h；每条有界边的实际步长会调整为整除边长且不超过 h
H_STEP = 0.02
# 半直线截断长度 L_trunc，截断端取齐次 Dirichlet 条件
TRUNCATION_LENGTH = 30.0

# δ 型顶点条件的耦合强度 α，0 表示 Kirchhoff 条件
DEFAULT_ALPHA = 0.0

# 求解器参数
SOLVER_TOL = 1e-8 # 投影梯度 / 残差的收敛阈值
MAX_ITER = 5000 # 梯度流的最大迭代次数
CONSTRAINT_TOL = 1e-12 # 质量约束的容差
NEWTON_MAX_ITER = 50 # Newton 迭代（抛光、NLDE、定频率束缚态）的最大步数
NEWTON_MIN_STEP = 2.0 ** -20 # 阻尼 Newton 的最小步长，低于此值判定停滞
ARMIJO_C = 1e-4 # Armijo 充分下降常数
TRIVIAL_NORM = 1e-6 # ‖ψ‖ 低于此值判定为平凡解

# 临界情形 p=6：当 μ ≥ μ_K·(1+CRITICAL_MARGIN) 时拒绝求解
CRITICAL_MARGIN = 0.01

# Gagliardo-Nirenberg 常数估计
GN_LEVELS = 2 # 嵌套加密的层数（含初始网格）
GN_MAX_ITER = 3000 # 每个起点的上升迭代次数
GN_TOL = 1e-9 # 商的梯度范数阈值
SUP_NORM_CANDIDATES = 60 # 上确界范数常数的候选节点数（顶点之外）

# Dirac 算子
DEFAULT_M = 1.0
DEFAULT_C = 1.0
# 谱隙验证：离散自由算子在 (-0.99 mc², 0.99 mc²) 内不应有特征值
SPECTRAL_GAP_FACTOR = 0.99

# 非相对论极限的默认光速序列
DEFAULT_C_SCHEDULE = [2.0, 4.0, 8.0, 16.0]

# 输出目录和文件名
OUTPUT_DIR = "output" # 输出文件将保存在此目录下
DOCUMENT_FILENAME = "result.json" # 结果文档
STATE_FILENAME = "state.csv" # 状态采样 (edge, x, value)
LIMIT_TABLE_FILENAME = "limit.csv" # 非相对论极限表
PROFILE_FILENAME = "profile.csv" # 重排剖面 (x, value)
MATRIX_DUMP_DIR = "matrices" # --dump-matrices 时 COO 三元组的目录

# 并发
# sweep 模式下同时运行的最大配置数，可以用环境变量 GRATWAVE_THREADS 覆盖
THREADS_ENV = "GRATWAVE_THREADS"
MAX_CONCURRENT_RUNS = 4

# 日志级别，可用 --log-level 覆盖
LOG_LEVEL = "WARNING"
