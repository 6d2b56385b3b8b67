# conftest.py

# 项目使用以仓库根目录为起点的绝对导入，pytest 运行时把根目录放进 sys.path
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
