"""
LogSLE 测试包
代数、随机模拟、配置与命令行的单元测试和集成测试
"""
